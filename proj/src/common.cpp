#include "hamfield/common.hpp"

#include <cmath>
#include <numbers>

namespace hamfield {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NewtonFailure: return "NewtonFailure";
    case ErrorKind::NotSeparable: return "NotSeparable";
    case ErrorKind::FlowIncomplete: return "FlowIncomplete";
    case ErrorKind::NoSuchBranch: return "NoSuchBranch";
    case ErrorKind::BranchLost: return "BranchLost";
    case ErrorKind::NonPositiveMass: return "NonPositiveMass";
    case ErrorKind::NegativeLambda: return "NegativeLambda";
    case ErrorKind::OffConstraint: return "OffConstraint";
  }
  return "Unknown";
}

double wrap_angle(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(x, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

}  // namespace hamfield
