#pragma once

// Re-verifies every bundled analytic fact and a set of module invariants
// against the numerical stack.

#include <cstdint>
#include <string>
#include <vector>

namespace hamfield {

struct CheckResult {
  std::string group;
  std::string name;
  std::string description;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string error;  // set when the check threw
};

struct SelftestOptions {
  bool strict = false;  // tolerances divided by 1e6
  std::uint64_t seed = 20160317;
};

struct SelftestReport {
  std::vector<CheckResult> checks;
  std::uint64_t seed = 0;
  bool strict = false;

  int failures() const;
  bool ok() const { return failures() == 0; }
};

SelftestReport run_selftest(const SelftestOptions& opts = {});

}  // namespace hamfield
