#pragma once

// Declarative scenarios: a JSON document naming a registered system, a task
// and its parameters. Running one yields a JSON report plus CSV trajectory
// tables written atomically into an output directory.

#include "hamfield/selftest.hpp"
#include "hamfield/system.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hamfield {

using json = nlohmann::json;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> task_names();

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> step;
  std::optional<std::string> out_dir;
};

struct ScenarioOutcome {
  json report;
  int exit_code = 0;  // 0 success, 3 task-level failure
  std::string failure;
  std::vector<std::string> written;
};

// Parses a scenario file; throws SchemaError on unreadable or malformed input.
json load_scenario(const std::string& path);

// Throws SchemaError on unknown keys, unknown task/system names, wrong types
// or missing task parameters. Nothing is computed.
void validate_scenario(const json& scenario);

// Validates, runs and (when write_files) writes report.json and CSV tables.
ScenarioOutcome run_scenario(const json& scenario, const RunOverrides& overrides = {}, bool write_files = true);

// FNV-1a 64 over the canonical serialization, as 16 hex digits.
std::string config_hash(const json& value);

// Header t,u1..ur,p1..pr; every number with 17 significant digits.
std::string trajectory_csv(const std::vector<double>& times, const std::vector<Vec>& positions,
                           const std::vector<Vec>& momenta);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

json selftest_to_json(const SelftestReport& rep);

const char* library_version();

}  // namespace hamfield
