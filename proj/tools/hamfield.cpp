// hamfield command line: run a scenario, run the self-test, list examples.
//
//   hamfield run <scenario.json> [--out DIR] [--seed N] [--step H]
//   hamfield selftest [--strict] [--seed N]
//   hamfield list-examples
//
// Exit codes: 0 success, 1 self-test failure, 2 schema error, 3 task failure.
// The default output directory is taken from HAMFIELD_OUT_DIR.

#include "hamfield/constraints.hpp"
#include "hamfield/example_systems.hpp"
#include "hamfield/scenario.hpp"
#include "hamfield/selftest.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace hamfield;

namespace {

int cmd_run(const std::string& path, const RunOverrides& ov) {
  try {
    const auto scenario = load_scenario(path);
    const auto outcome = run_scenario(scenario, ov);
    for (const auto& f : outcome.written) std::cerr << "wrote " << f << "\n";
    if (outcome.exit_code != 0) std::cerr << "task failed: " << outcome.failure << "\n";
    return outcome.exit_code;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_selftest(bool strict, std::uint64_t seed) {
  const auto rep = run_selftest({strict, seed});
  std::cout << selftest_to_json(rep).dump(2) << "\n";
  for (const auto& c : rep.checks) {
    std::cerr << (c.pass ? "pass " : "FAIL ") << c.group << "/" << c.name << "  measured=" << c.measured
              << " tol=" << c.tolerance;
    if (!c.error.empty()) std::cerr << "  (" << c.error << ")";
    std::cerr << "\n";
  }
  std::cerr << rep.checks.size() - rep.failures() << "/" << rep.checks.size() << " checks passed\n";
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hamfield: Hamiltonian mechanics as a field theory on [0,1] with boundary"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));

  auto* run = app.add_subcommand("run", "run a scenario file");
  std::string path;
  std::string out_dir;
  std::uint64_t seed = 0;
  double step = 0.0;
  run->add_option("scenario", path, "scenario JSON file")->required();
  auto* out_opt = run->add_option("--out", out_dir, "output directory (default $HAMFIELD_OUT_DIR or .)");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed override");
  auto* step_opt = run->add_option("--step", step, "integrator step override")->check(CLI::PositiveNumber);

  auto* selftest = app.add_subcommand("selftest", "verify bundled facts and invariants");
  bool strict = false;
  std::uint64_t st_seed = SelftestOptions{}.seed;
  selftest->add_flag("--strict", strict, "tighten every tolerance by 1e6");
  selftest->add_option("--seed", st_seed, "RNG seed for random probes");

  auto* list = app.add_subcommand("list-examples", "list registered systems, constraints and tasks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) {
    RunOverrides ov;
    if (*out_opt) ov.out_dir = out_dir;
    if (*seed_opt) ov.seed = seed;
    if (*step_opt) ov.step = step;
    return cmd_run(path, ov);
  }
  if (*selftest) return cmd_selftest(strict, st_seed);
  if (*list) {
    std::cout << "systems:";
    for (const auto& n : example_names()) std::cout << " " << n;
    std::cout << "\nconstraints:";
    for (const auto& n : constraint_names()) std::cout << " " << n;
    std::cout << "\ntasks:";
    for (const auto& n : task_names()) std::cout << " " << n;
    std::cout << "\n";
  }
  return 0;
}
