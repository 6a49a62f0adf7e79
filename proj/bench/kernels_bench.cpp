// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "skf/measurements.hpp"
#include "skf/simulator.hpp"

using namespace skf;

namespace {

std::vector<PointPlaneFactor> make_planes(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<PointPlaneFactor> out(n);
  for (auto& f : out) {
    f.point_body = 5.0 * Vec3(g(rng), g(rng), g(rng));
    f.plane_normal = Vec3(g(rng), g(rng), g(rng)).normalized();
    f.plane_offset = g(rng);
  }
  return out;
}

std::vector<VisualFactor> make_landmarks(std::size_t n) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<VisualFactor> out(n);
  for (auto& f : out) {
    const Vec3 pc(2 * u(rng), 2 * u(rng), 3 + 2 * u(rng));
    f.landmark_world = pc;
    f.pixel_obs = Vec2(pc.x() / pc.z(), pc.y() / pc.z());
  }
  return out;
}

template <bool Parallel>
void BM_LinearizePointPlane(benchmark::State& st) {
  const auto factors = make_planes(static_cast<std::size_t>(st.range(0)));
  const Pose x;
  for (auto _ : st) {
    if constexpr (Parallel)
      benchmark::DoNotOptimize(linearize_point_plane(factors, x));
    else
      benchmark::DoNotOptimize(serial::linearize_point_plane(factors, x));
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_LinearizeVisual(benchmark::State& st) {
  const auto factors = make_landmarks(static_cast<std::size_t>(st.range(0)));
  const Pose x;
  for (auto _ : st) {
    if constexpr (Parallel)
      benchmark::DoNotOptimize(linearize_visual(factors, x));
    else
      benchmark::DoNotOptimize(serial::linearize_visual(factors, x));
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_Reduce(benchmark::State& st) {
  const LidarBatch batch =
      serial::linearize_point_plane(make_planes(static_cast<std::size_t>(st.range(0))), Pose{});
  for (auto _ : st) {
    if constexpr (Parallel)
      benchmark::DoNotOptimize(reduce_lidar(batch));
    else
      benchmark::DoNotOptimize(serial::reduce(batch.jacobian, batch.residual, batch.variance));
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_Generate(benchmark::State& st) {
  const ScenarioSpec spec = scenario_library(ScenarioName::Corridor);
  for (auto _ : st) {
    if constexpr (Parallel)
      benchmark::DoNotOptimize(generate(spec));
    else
      benchmark::DoNotOptimize(serial::generate(spec));
  }
}

}  // namespace

BENCHMARK(BM_LinearizePointPlane<false>)->Name("linearize_point_plane/serial")->Range(256, 1 << 16);
BENCHMARK(BM_LinearizePointPlane<true>)->Name("linearize_point_plane/omp")->Range(256, 1 << 16);
BENCHMARK(BM_LinearizeVisual<false>)->Name("linearize_visual/serial")->Range(64, 1 << 14);
BENCHMARK(BM_LinearizeVisual<true>)->Name("linearize_visual/omp")->Range(64, 1 << 14);
BENCHMARK(BM_Reduce<false>)->Name("reduce/serial")->Range(256, 1 << 16);
BENCHMARK(BM_Reduce<true>)->Name("reduce/omp")->Range(256, 1 << 16);
BENCHMARK(BM_Generate<false>)->Name("generate/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Generate<true>)->Name("generate/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
