#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace skf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// boxminus with a relative rotation too close to pi for a unique logarithm.
class AngleOverflow : public Error {
 public:
  explicit AngleOverflow(double angle);
  double angle() const { return angle_; }

 private:
  double angle_;
};

class NotSymmetric : public Error {
 public:
  explicit NotSymmetric(double asymmetry);
  double asymmetry() const { return asymmetry_; }

 private:
  double asymmetry_;
};

class NearSingular : public Error {
 public:
  NearSingular(double min_eigenvalue, double max_eigenvalue);
  double min_eigenvalue() const { return min_; }
  double max_eigenvalue() const { return max_; }

 private:
  double min_;
  double max_;
};

class BehindCamera : public Error {
 public:
  explicit BehindCamera(std::vector<std::size_t> indices);
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

class PriorSingular : public Error {
 public:
  using Error::Error;
};

class UnknownScenario : public Error {
 public:
  using Error::Error;
};

class ScenarioLoadError : public Error {
 public:
  using Error::Error;
};

class OutputIoError : public Error {
 public:
  using Error::Error;
};

class MissingArtifacts : public Error {
 public:
  using Error::Error;
};

}  // namespace skf
