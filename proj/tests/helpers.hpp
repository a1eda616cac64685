#pragma once

#include "hamfield/common.hpp"

#include <initializer_list>

namespace testing {

inline hamfield::Vec v1(double x) { return hamfield::Vec::Constant(1, x); }

inline hamfield::Vec vec(std::initializer_list<double> xs) {
  hamfield::Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline double sup(const hamfield::Vec& v) { return v.lpNorm<Eigen::Infinity>(); }

}  // namespace testing
