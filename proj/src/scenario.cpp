#include "hamfield/scenario.hpp"

#include "hamfield/constraints.hpp"
#include "hamfield/example_systems.hpp"
#include "hamfield/lagrangian.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#ifndef HAMFIELD_VERSION
#define HAMFIELD_VERSION "0.0.0"
#endif

namespace hamfield {

namespace fs = std::filesystem;

const char* library_version() { return HAMFIELD_VERSION; }

std::vector<std::string> task_names() {
  return {"flow", "bvp", "classify", "isotropy", "generating-function", "lambda-study", "constrained", "gotay"};
}

namespace {

struct TaskKeys {
  std::set<std::string> required;
  std::set<std::string> optional;
};

const std::map<std::string, TaskKeys>& task_table() {
  static const std::map<std::string, TaskKeys> t{
      {"flow", {{"u0", "p0"}, {"require_completion"}}},
      {"bvp", {{"endpoints"}, {"require_solution"}}},
      {"generating-function", {{"endpoints"}, {"branch", "h_fd"}}},
      {"classify", {{}, {"pairs", "sample_count", "box", "openness_probe"}}},
      {"isotropy", {{}, {"source", "samples", "box", "pairs", "h_fd"}}},
      {"lambda-study", {{"lambdas", "endpoints"}, {}}},
      {"constrained", {{"constraint", "u0", "e0"}, {"lambda"}}},
      {"gotay", {{"constraint", "u", "e"}, {"p", "lambda"}}},
  };
  return t;
}

const std::set<std::string> kCommonKeys{"system", "task", "integrator", "shooting", "seed", "output", "description"};
const std::set<std::string> kIntegratorKeys{"scheme", "step", "newton_tol", "newton_max_iter", "blowup_threshold", "max_step_change",
                                            "max_halvings"};
const std::set<std::string> kShootingKeys{"newton_tol", "max_iter", "seed_count", "seed_box", "distinctness_radius",
                                          "singular_condition", "seeds"};
const std::set<std::string> kOutputKeys{"dir", "report", "trajectory"};
const std::set<std::string> kSystemKeys{"name", "params"};

[[noreturn]] void schema(const std::string& msg) { throw SchemaError(msg); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) schema("unknown key '" + key + "' in " + where);
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) schema(where + " must be an object");
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) schema(what + " must be a number");
  return j.get<double>();
}

Vec to_vec(const json& j, const std::string& what) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) schema(what + " must be a number or a non-empty array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = number(j[i], what);
  return v;
}

Vec to_vec(const json& j, const std::string& what, int dim) {
  Vec v = to_vec(j, what);
  if (v.size() != dim) schema(what + " must have " + std::to_string(dim) + " components");
  return v;
}

std::pair<Vec, Vec> to_pair(const json& j, const std::string& what, int dim) {
  if (!j.is_array() || j.size() != 2) schema(what + " must be a pair [u0, u1]");
  return {to_vec(j[0], what + "[0]", dim), to_vec(j[1], what + "[1]", dim)};
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

struct SystemChoice {
  std::string name;
  std::map<std::string, double> params;
};

SystemChoice parse_system(const json& j) {
  SystemChoice c;
  if (j.is_string()) {
    c.name = j.get<std::string>();
  } else if (j.is_object()) {
    reject_unknown(j, kSystemKeys, "system");
    if (!j.contains("name") || !j["name"].is_string()) schema("system.name must be a string");
    c.name = j["name"].get<std::string>();
    if (j.contains("params")) {
      require_object(j["params"], "system.params");
      for (const auto& [k, v] : j["params"].items()) c.params[k] = number(v, "system.params." + k);
    }
  } else {
    schema("system must be a name or an object {name, params}");
  }
  const auto names = example_names();
  if (std::find(names.begin(), names.end(), c.name) == names.end()) schema("unknown system '" + c.name + "'");
  static const std::set<std::string> known{"m", "k", "lambda", "c", "linear_rate", "kinetic", "slope"};
  for (const auto& [k, _] : c.params)
    if (!known.count(k)) schema("unknown system parameter '" + k + "'");
  return c;
}

IntegratorConfig parse_integrator(const json& scenario, const RunOverrides& ov) {
  IntegratorConfig c;
  if (scenario.contains("integrator")) {
    const auto& j = scenario["integrator"];
    require_object(j, "integrator");
    reject_unknown(j, kIntegratorKeys, "integrator");
    if (j.contains("scheme")) {
      if (!j["scheme"].is_string()) schema("integrator.scheme must be a string");
      try {
        c.scheme = scheme_from_string(j["scheme"].get<std::string>());
      } catch (const Error& e) {
        schema(e.what());
      }
    }
    if (j.contains("step")) c.step = number(j["step"], "integrator.step");
    if (j.contains("newton_tol")) c.newton_tol = number(j["newton_tol"], "integrator.newton_tol");
    if (j.contains("newton_max_iter")) c.newton_max_iter = static_cast<int>(number(j["newton_max_iter"], "integrator.newton_max_iter"));
    if (j.contains("blowup_threshold")) c.blowup_threshold = number(j["blowup_threshold"], "integrator.blowup_threshold");
    if (j.contains("max_step_change")) c.max_step_change = number(j["max_step_change"], "integrator.max_step_change");
    if (j.contains("max_halvings")) c.max_halvings = static_cast<int>(number(j["max_halvings"], "integrator.max_halvings"));
  }
  if (ov.step) c.step = *ov.step;
  try {
    c.validate();
  } catch (const Error& e) {
    schema(e.what());
  }
  return c;
}

std::uint64_t parse_seed(const json& scenario, const RunOverrides& ov) {
  if (ov.seed) return *ov.seed;
  if (scenario.contains("seed")) {
    if (!scenario["seed"].is_number_unsigned()) schema("seed must be a non-negative integer");
    return scenario["seed"].get<std::uint64_t>();
  }
  return ShootingConfig{}.rng_seed;
}

ShootingConfig parse_shooting(const json& scenario, const IntegratorConfig& integ, std::uint64_t seed, int dim) {
  ShootingConfig c;
  c.integrator = integ;
  c.rng_seed = seed;
  if (scenario.contains("shooting")) {
    const auto& j = scenario["shooting"];
    require_object(j, "shooting");
    reject_unknown(j, kShootingKeys, "shooting");
    if (j.contains("newton_tol")) c.newton_tol = number(j["newton_tol"], "shooting.newton_tol");
    if (j.contains("max_iter")) c.max_iter = static_cast<int>(number(j["max_iter"], "shooting.max_iter"));
    if (j.contains("seed_count")) c.seed_count = static_cast<int>(number(j["seed_count"], "shooting.seed_count"));
    if (j.contains("seed_box")) c.seed_box = number(j["seed_box"], "shooting.seed_box");
    if (j.contains("distinctness_radius")) c.distinctness_radius = number(j["distinctness_radius"], "shooting.distinctness_radius");
    if (j.contains("singular_condition")) c.singular_condition = number(j["singular_condition"], "shooting.singular_condition");
    if (j.contains("seeds")) {
      if (!j["seeds"].is_array()) schema("shooting.seeds must be an array");
      for (const auto& s : j["seeds"]) c.seeds.push_back(to_vec(s, "shooting.seeds[]", dim));
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    schema(e.what());
  }
  return c;
}

// Uniform endpoints; embedded systems get points on the unit sphere.
std::vector<std::pair<Vec, Vec>> random_pairs(const HamiltonianSystem& sys, int count, double box, std::uint64_t seed) {
  auto pts = random_phase_points(sys.dim(), count, box, seed);
  if (sys.momentum_basis)
    for (auto& [a, b] : pts) a.normalize(), b.normalize();
  return pts;
}

std::vector<std::pair<Vec, Vec>> random_phase(const HamiltonianSystem& sys, int count, double box, std::uint64_t seed) {
  auto pts = random_phase_points(sys.dim(), count, box, seed);
  if (sys.momentum_basis)
    for (auto& [u, p] : pts) {
      u.normalize();
      const Mat b = (*sys.momentum_basis)(u);
      p = b * (b.transpose() * p);
    }
  return pts;
}

VectorField field_from(const SystemChoice& c) {
  if (c.params.count("linear_rate")) return linear_field(1, c.params.at("linear_rate"));
  return constant_field(Vec::Constant(1, c.params.count("c") ? c.params.at("c") : 1.0));
}

int get_int(const json& s, const char* key, int fallback) {
  if (!s.contains(key)) return fallback;
  const double v = number(s[key], key);
  if (v < 1 || v != std::floor(v)) schema(std::string(key) + " must be a positive integer");
  return static_cast<int>(v);
}

bool get_bool(const json& s, const char* key, bool fallback) {
  if (!s.contains(key)) return fallback;
  if (!s[key].is_boolean()) schema(std::string(key) + " must be a boolean");
  return s[key].get<bool>();
}

double get_number(const json& s, const char* key, double fallback) {
  return s.contains(key) ? number(s[key], key) : fallback;
}

struct Table {
  std::string suffix;
  std::vector<double> times;
  std::vector<Vec> positions, momenta;
};

struct TaskResult {
  json result = json::object();
  std::vector<Table> tables;
  std::string failure;  // non-empty means exit code 3
};

void add_trajectory(TaskResult& out, const std::string& suffix, const Trajectory& tr) {
  out.tables.push_back({suffix, tr.grid.nodes(), tr.positions, tr.momenta});
}

json solution_json(const HamiltonianSystem& sys, const BvpSolution& s) {
  const auto bp = boundary_projection(s.trajectory);
  return {{"p0", vec_json(bp.p0)},         {"p1", vec_json(bp.p1)},
          {"u0", vec_json(bp.u0)},         {"u1", vec_json(bp.u1)},
          {"w", action_functional(sys, s.trajectory)},
          {"residual_norm", s.residual_norm}, {"condition", s.condition},
          {"singular", s.singular},        {"seed_index", s.seed_index}};
}

json bvp_json(const HamiltonianSystem& sys, const BvpSolutionSet& set) {
  json sols = json::array();
  for (const auto& s : set.solutions) sols.push_back(solution_json(sys, s));
  return {{"classification", to_string(set.classification)},
          {"isolation_stable", set.isolation_stable},
          {"family_spread", set.family_spread},
          {"converged_seeds", set.converged_seeds},
          {"total_seeds", set.total_seeds},
          {"note", set.note},
          {"solutions", sols}};
}

json isotropy_json(const IsotropyReport& r) {
  json details = json::array();
  for (const auto& s : r.details)
    details.push_back({{"a", vec_json(s.a)}, {"b", vec_json(s.b)}, {"branch", s.branch}, {"applicable", s.applicable},
                       {"reason", s.reason}, {"defect", s.defect}, {"rank", s.rank}});
  return {{"tangent_source", to_string(r.tangent_source)},
          {"samples", r.samples},
          {"applicable", r.applicable},
          {"max_defect", r.max_defect},
          {"rank_estimate", r.rank_estimate},
          {"dim", r.dim},
          {"rng_seed", r.rng_seed},
          {"lagrangian_at_1e-8", r.lagrangian(1e-8)},
          {"caveat", r.caveat},
          {"details", details}};
}

struct Prepared {
  std::string task;
  SystemChoice choice;
  ExampleSystem example;
  IntegratorConfig integ;
  ShootingConfig shoot;
  std::uint64_t seed = 0;
};

Prepared prepare(const json& s, const RunOverrides& ov) {
  require_object(s, "scenario");
  if (!s.contains("task") || !s["task"].is_string()) schema("task must be a string");
  const auto task = s["task"].get<std::string>();
  const auto it = task_table().find(task);
  if (it == task_table().end()) schema("unknown task '" + task + "'");
  auto allowed = kCommonKeys;
  allowed.insert(it->second.required.begin(), it->second.required.end());
  allowed.insert(it->second.optional.begin(), it->second.optional.end());
  reject_unknown(s, allowed, "scenario");
  for (const auto& k : it->second.required)
    if (!s.contains(k)) schema("task '" + task + "' requires '" + k + "'");
  if (!s.contains("system")) schema("scenario requires 'system'");
  if (s.contains("output")) {
    require_object(s["output"], "output");
    reject_unknown(s["output"], kOutputKeys, "output");
    for (const auto& [k, v] : s["output"].items())
      if (!v.is_string()) schema("output." + k + " must be a string");
  }
  if (s.contains("description") && !s["description"].is_string()) schema("description must be a string");

  Prepared p{task, parse_system(s["system"]), {}, {}, {}, 0};
  try {
    p.example = make_example(p.choice.name, p.choice.params);
  } catch (const Error& e) {
    schema(e.what());
  }
  p.integ = parse_integrator(s, ov);
  p.seed = parse_seed(s, ov);
  p.shoot = parse_shooting(s, p.integ, p.seed, p.example.system.momentum_basis ? p.example.system.dim() - 1 : p.example.system.dim());
  return p;
}

// Parses every task parameter; the returned closure performs the computation.
std::function<TaskResult()> plan(const json& s, const Prepared& pr) {
  const auto& sys = pr.example.system;
  const int r = sys.dim();
  const auto& integ = pr.integ;
  const auto& shoot = pr.shoot;

  if (pr.task == "flow") {
    const Vec u0 = to_vec(s["u0"], "u0", r), p0 = to_vec(s["p0"], "p0", r);
    const bool require = get_bool(s, "require_completion", false);
    return [=, &sys] {
      TaskResult out;
      const auto f = integrate_flow(sys, u0, p0, integ);
      out.result = {{"status", to_string(f.status.kind)},
                    {"t_end", f.times.back()},
                    {"u_end", vec_json(f.positions.back())},
                    {"p_end", vec_json(f.momenta.back())},
                    {"steps", f.times.size() - 1},
                    {"scheme", to_string(integ.scheme)}};
      if (f.status.kind == FlowStatus::Kind::BlowUp) out.result["t_escape"] = f.status.t;
      if (f.status.kind == FlowStatus::Kind::NewtonFailure) out.result["t_failure"] = f.status.t;
      if (sys.autonomous) {
        double drift = 0.0;
        const double h0 = sys.hamiltonian(0.0, u0, p0);
        for (std::size_t k = 0; k < f.times.size(); ++k)
          drift = std::max(drift, std::abs(sys.hamiltonian(f.times[k], f.positions[k], f.momenta[k]) - h0));
        out.result["energy_drift"] = drift;
      }
      out.tables.push_back({"", f.times, f.positions, f.momenta});
      if (require && !f.completed()) out.failure = "flow did not complete: " + f.status.describe();
      return out;
    };
  }
  if (pr.task == "bvp") {
    const auto [u0, u1] = to_pair(s["endpoints"], "endpoints", r);
    const bool require = get_bool(s, "require_solution", true);
    return [=, &sys] {
      TaskResult out;
      const auto set = solve_dirichlet(sys, u0, u1, shoot);
      out.result = bvp_json(sys, set);
      for (std::size_t b = 0; b < set.solutions.size(); ++b)
        add_trajectory(out, b == 0 ? "" : "_branch" + std::to_string(b), set.solutions[b].trajectory);
      if (require && set.solutions.empty()) out.failure = "no solution joins the endpoints";
      return out;
    };
  }
  if (pr.task == "generating-function") {
    const auto [u0, u1] = to_pair(s["endpoints"], "endpoints", r);
    if (s.contains("branch") && !s["branch"].is_number_unsigned()) schema("branch must be a non-negative integer");
    const std::size_t branch = s.value("branch", std::size_t{0});
    const double h_fd = get_number(s, "h_fd", 1e-5);
    return [=, &sys] {
      TaskResult out;
      try {
        const auto g = generating_function_check(sys, u0, u1, shoot, branch, h_fd);
        out.result = {{"branch", branch},         {"w", g.w},
                      {"defect_u0", g.defect_u0}, {"defect_u1", g.defect_u1},
                      {"symmetry_defect", g.symmetry_defect}};
      } catch (const Error& e) {
        out.failure = e.what();
      }
      return out;
    };
  }
  if (pr.task == "classify") {
    std::vector<std::pair<Vec, Vec>> pairs;
    if (s.contains("pairs")) {
      if (!s["pairs"].is_array() || s["pairs"].empty()) schema("pairs must be a non-empty array");
      for (const auto& j : s["pairs"]) pairs.push_back(to_pair(j, "pairs[]", r));
    } else {
      pairs = random_pairs(sys, get_int(s, "sample_count", 8), get_number(s, "box", 1.5), pr.seed);
    }
    const double probe = get_number(s, "openness_probe", 1e-3);
    return [=, &sys] {
      TaskResult out;
      const auto rep = classify_theory(sys, pairs, shoot, probe);
      json pj = json::array();
      for (const auto& p : rep.pairs)
        pj.push_back({{"u0", vec_json(p.u0)}, {"u1", vec_json(p.u1)}, {"classification", to_string(p.classification)},
                      {"solutions", p.solutions}, {"open_neighbourhood", p.open_neighbourhood}});
      out.result = {{"verdict", to_string(rep.verdict)}, {"evidence", rep.evidence}, {"note", rep.note}, {"pairs", pj}};
      out.result["witness"] = rep.witness ? json(*rep.witness) : json(nullptr);
      return out;
    };
  }
  if (pr.task == "isotropy") {
    const std::string source = s.value("source", std::string("flow"));
    if (source != "flow" && source != "bvp") schema("source must be 'flow' or 'bvp'");
    const int samples = get_int(s, "samples", 10);
    const double box = get_number(s, "box", 1.5);
    const double h_fd = get_number(s, "h_fd", 1e-5);
    std::vector<std::pair<Vec, Vec>> pairs;
    if (s.contains("pairs")) {
      if (source != "bvp") schema("pairs only apply to source 'bvp'");
      for (const auto& j : s["pairs"]) pairs.push_back(to_pair(j, "pairs[]", r));
    }
    return [=, &sys] {
      TaskResult out;
      if (source == "flow") {
        auto rep = isotropy_defect_flow(sys, random_phase(sys, samples, box, pr.seed), integ);
        rep.rng_seed = pr.seed;
        out.result = isotropy_json(rep);
      } else {
        const auto pts = pairs.empty() ? random_pairs(sys, samples, box, pr.seed) : pairs;
        out.result = isotropy_json(isotropy_defect_bvp(sys, pts, shoot, h_fd));
      }
      return out;
    };
  }
  if (pr.task == "lambda-study") {
    if (pr.choice.name != "lambda-family" && pr.choice.name != "cotangent-lift")
      schema("lambda-study requires system lambda-family or cotangent-lift");
    if (!s["lambdas"].is_array() || s["lambdas"].empty()) schema("lambdas must be a non-empty array");
    std::vector<double> lambdas;
    for (const auto& l : s["lambdas"]) {
      lambdas.push_back(number(l, "lambdas[]"));
      if (!(lambdas.back() > 0)) schema("lambdas must be positive");
    }
    const auto [u0, u1] = to_pair(s["endpoints"], "endpoints", 1);
    const auto field = field_from(pr.choice);
    return [=] {
      TaskResult out;
      const auto rep = topological_limit_study(field, lambdas, u0, u1, shoot);
      json rows = json::array();
      for (const auto& row : rep.rows) {
        json j = {{"lambda", row.lambda}, {"solved", row.solved}};
        if (row.solved) {
          j["p0"] = row.p0;
          j["w"] = row.w;
          j["second_order_residual"] = row.second_order_residual;
        } else {
          j["failure"] = row.failure;
        }
        rows.push_back(j);
      }
      out.result = {{"rows", rows}};
      out.result["p0_slope"] = rep.p0_slope ? json(*rep.p0_slope) : json(nullptr);
      out.result["distance_to_flow_line"] = rep.distance_to_flow_line ? json(*rep.distance_to_flow_line) : json(nullptr);
      return out;
    };
  }

  // constraint tasks
  if (!s["constraint"].is_string()) schema("constraint must be a name");
  ConstraintSpec spec;
  try {
    spec = make_constraint(s["constraint"].get<std::string>(), r);
  } catch (const Error& e) {
    schema(e.what());
  }
  if (pr.task == "constrained") {
    const Vec u0 = to_vec(s["u0"], "u0", r), e0 = to_vec(s["e0"], "e0", spec.k_dim);
    std::optional<LambdaPath> gauge;
    if (s.contains("lambda")) {
      const Vec lam = to_vec(s["lambda"], "lambda", r);
      gauge = [lam](double) { return lam; };
    }
    return [=, &sys] {
      TaskResult out;
      const auto c = integrate_constrained(sys, spec, u0, e0, integ, gauge);
      out.result = {{"status", c.unstable_at ? "Unstable" : to_string(c.flow.status.kind)},
                    {"gauge", c.gauge},
                    {"energy_drift", c.energy_drift},
                    {"constraint_drift", c.constraint_drift},
                    {"polar_residual", c.polar_residual},
                    {"u_end", vec_json(c.flow.positions.back())},
                    {"p_end", vec_json(c.flow.momenta.back())},
                    {"e_end", vec_json(c.e.back())},
                    {"note", "D is the minimal-norm least-squares solution (one gauge among many)"}};
      out.result["unstable_at"] = c.unstable_at ? json(*c.unstable_at) : json(nullptr);
      out.tables.push_back({"", c.flow.times, c.flow.positions, c.flow.momenta});
      if (c.unstable_at) out.failure = "tangency condition fails at t = " + std::to_string(*c.unstable_at);
      else if (!c.flow.completed()) out.failure = "constrained integration failed: " + c.flow.status.describe();
      return out;
    };
  }
  // gotay
  const Vec u = to_vec(s["u"], "u", r), e = to_vec(s["e"], "e", spec.k_dim);
  const Vec p = s.contains("p") ? to_vec(s["p"], "p", r) : spec.sigma(e);
  const Vec lam = s.contains("lambda") ? to_vec(s["lambda"], "lambda", r) : Vec(Vec::Zero(r));
  return [=, &sys] {
    TaskResult out;
    const ExtendedState st{u, p, lam, e};
    const auto g = gotay_step(sys, spec, st);
    out.result = {{"stability", to_string(g.stability)},
                  {"terminated", g.terminated},
                  {"kernel_dim", g.kernel_basis.cols()},
                  {"kernel_residual", g.kernel_residual},
                  {"phi", vec_json(g.phi)},
                  {"psi", vec_json(g.psi)},
                  {"D", vec_json(g.D)},
                  {"tangency_residual", g.tangency_residual},
                  {"violating_direction", vec_json(g.violating_direction)},
                  {"note", g.note}};
    if (g.terminated) {
      out.result["C"] = vec_json(g.C);
      out.result["c_residual"] = g.c_residual;
    }
    try {
      out.result["stability_check"] = stability_check(sys, spec, st);
    } catch (const Error& err) {
      out.result["stability_check"] = nullptr;
      out.result["stability_check_error"] = err.what();
    }
    return out;
  };
}

std::string resolve_out_dir(const json& s, const RunOverrides& ov) {
  if (ov.out_dir) return *ov.out_dir;
  if (s.contains("output") && s["output"].contains("dir")) return s["output"]["dir"].get<std::string>();
  if (const char* env = std::getenv("HAMFIELD_OUT_DIR")) return env;
  return ".";
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

json load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read scenario file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed scenario: ") + e.what());
  }
}

void validate_scenario(const json& scenario) {
  const auto pr = prepare(scenario, {});
  (void)plan(scenario, pr);
}

std::string config_hash(const json& value) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : value.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string trajectory_csv(const std::vector<double>& times, const std::vector<Vec>& positions,
                           const std::vector<Vec>& momenta) {
  std::ostringstream os;
  const auto r = positions.empty() ? 0 : positions.front().size();
  os << "t";
  for (Eigen::Index a = 0; a < r; ++a) os << ",u" << a + 1;
  for (Eigen::Index a = 0; a < r; ++a) os << ",p" << a + 1;
  os << "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << fmt17(times[k]);
    for (Eigen::Index a = 0; a < r; ++a) os << "," << fmt17(positions[k][a]);
    for (Eigen::Index a = 0; a < r; ++a) os << "," << fmt17(momenta[k][a]);
    os << "\n";
  }
  return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

ScenarioOutcome run_scenario(const json& scenario, const RunOverrides& overrides, bool write_files) {
  const auto start = std::chrono::steady_clock::now();
  const auto pr = prepare(scenario, overrides);
  const auto task = plan(scenario, pr);
  const std::string out_dir = resolve_out_dir(scenario, overrides);

  json effective = scenario;
  effective["seed"] = pr.seed;
  if (overrides.step) effective["integrator"]["step"] = *overrides.step;

  ScenarioOutcome out;
  TaskResult res;
  try {
    res = task();
  } catch (const Error& e) {
    res.failure = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out.report = {{"scenario", scenario},
                {"task", pr.task},
                {"system", pr.example.system.name},
                {"result", res.result},
                {"status", res.failure.empty() ? "ok" : "failed"},
                {"provenance",
                 {{"library", "hamfield"},
                  {"version", library_version()},
                  {"seed", pr.seed},
                  {"config_hash", config_hash(effective)},
                  {"wall_time_s", wall}}}};
  if (!res.failure.empty()) {
    out.report["failure"] = res.failure;
    out.failure = res.failure;
    out.exit_code = 3;
  }

  if (write_files) {
    std::string report_name = "report.json", traj = "trajectory";
    if (scenario.contains("output")) {
      report_name = scenario["output"].value("report", report_name);
      traj = scenario["output"].value("trajectory", traj);
    }
    const fs::path dir(out_dir);
    std::vector<std::string> tables;
    for (const auto& t : res.tables) {
      const auto path = (dir / (traj + t.suffix + ".csv")).string();
      write_atomic(path, trajectory_csv(t.times, t.positions, t.momenta));
      tables.push_back(path);
    }
    out.report["outputs"] = tables;
    const auto rpath = (dir / report_name).string();
    write_atomic(rpath, out.report.dump(2) + "\n");
    out.written = tables;
    out.written.push_back(rpath);
  }
  return out;
}

json selftest_to_json(const SelftestReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json j = {{"group", c.group},          {"name", c.name},
              {"description", c.description}, {"tolerance", c.tolerance},
              {"pass", c.pass}};
    j["measured"] = std::isfinite(c.measured) ? json(c.measured) : json(nullptr);
    if (!c.error.empty()) j["error"] = c.error;
    checks.push_back(j);
  }
  return {{"seed", rep.seed},
          {"strict", rep.strict},
          {"checks", checks},
          {"failures", rep.failures()},
          {"provenance", {{"library", "hamfield"}, {"version", library_version()}}}};
}

}  // namespace hamfield
