#pragma once

#include <array>
#include <cstdint>

namespace skf {

/// Philox4x32-10 block function (Salmon et al.). Stateless: the output is a
/// pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based generator keyed by a 64-bit seed. Every draw is addressed by
/// (frame, index, stream), so values do not depend on evaluation order or
/// thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::array<std::uint32_t, 4> block(std::uint64_t frame, std::uint32_t index,
                                     std::uint32_t stream) const;
  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t frame, std::uint32_t index, std::uint32_t stream) const;
  /// Standard normal via Box-Muller on one block.
  double normal(std::uint64_t frame, std::uint32_t index, std::uint32_t stream) const;

 private:
  std::uint64_t seed_;
};

}  // namespace skf
