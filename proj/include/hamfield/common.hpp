#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hamfield {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind {
  NonFinite,
  GridTooCoarse,
  GridMismatch,
  DimensionMismatch,
  InvalidArgument,
  NewtonFailure,
  NotSeparable,
  FlowIncomplete,
  NoSuchBranch,
  BranchLost,
  NonPositiveMass,
  NegativeLambda,
  OffConstraint,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

// Wraps an angle into (-pi, pi].
double wrap_angle(double x);

}  // namespace hamfield
