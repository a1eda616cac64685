#include "hamfield/boundary_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace hamfield {

void ShootingConfig::validate() const {
  integrator.validate();
  if (!(newton_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "newton_tol must be positive");
  if (max_iter < 1) throw Error(ErrorKind::InvalidArgument, "max_iter must be >= 1");
  if (seeds.empty() && seed_count < 1)
    throw Error(ErrorKind::InvalidArgument, "at least one multistart seed is required");
  if (!(distinctness_radius > 0.0))
    throw Error(ErrorKind::InvalidArgument, "distinctness_radius must be positive");
}

const char* to_string(BvpClass c) {
  switch (c) {
    case BvpClass::Unique: return "Unique";
    case BvpClass::MultipleIsolated: return "MultipleIsolated";
    case BvpClass::Continuum: return "Continuum";
    case BvpClass::NoSolution: return "NoSolution";
  }
  return "Unknown";
}

const char* to_string(TheoryVerdict v) {
  switch (v) {
    case TheoryVerdict::Dirichlet: return "Dirichlet";
    case TheoryVerdict::LocallyDirichlet: return "LocallyDirichlet";
    case TheoryVerdict::Neither: return "Neither";
  }
  return "Unknown";
}

namespace {

struct Evaluation {
  Vec residual;
  Mat jacobian;
};

using Evaluator = std::function<std::optional<Evaluation>(const Vec& x)>;

struct NewtonOutcome {
  bool converged = false;
  Vec x;
  Evaluation at;
  int iterations = 0;
};

double sup(const Vec& v) { return v.lpNorm<Eigen::Infinity>(); }

Vec least_squares_step(const Mat& jac, const Vec& rhs) {
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-13);
  return svd.solve(rhs);
}

double condition_number(const Mat& jac) {
  Eigen::JacobiSVD<Mat> svd(jac);
  const Vec s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return std::numeric_limits<double>::infinity();
  const double smin = s[s.size() - 1];
  return smin == 0.0 ? std::numeric_limits<double>::infinity() : s[0] / smin;
}

Vec null_direction(const Mat& jac) {
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullV);
  return svd.matrixV().col(svd.matrixV().cols() - 1);
}

// Damped Newton (Gauss-Newton with minimal-norm steps for non-square
// systems) with a backtracking line search on the sup-norm of the residual.
NewtonOutcome damped_newton(const Evaluator& f, Vec x, double tol, int max_iter) {
  NewtonOutcome out;
  auto cur = f(x);
  if (!cur) return out;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    const double n = sup(cur->residual);
    if (n <= tol) {
      // A few undamped polishing steps, kept only while they help.
      for (int k = 0; k < 3 && sup(cur->residual) > 0.0; ++k) {
        const Vec dx = least_squares_step(cur->jacobian, -cur->residual);
        auto trial = f(x + dx);
        if (!trial || !(sup(trial->residual) < sup(cur->residual))) break;
        x += dx;
        cur = std::move(trial);
      }
      out.converged = true;
      out.x = x;
      out.at = *cur;
      return out;
    }
    const Vec dx = least_squares_step(cur->jacobian, -cur->residual);
    if (!dx.allFinite() || sup(dx) <= 1e-15 * std::max(1.0, sup(x))) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 16; ++ls, lambda *= 0.5) {
      auto trial = f(x + lambda * dx);
      if (trial && sup(trial->residual) < (1.0 - 1e-4 * lambda) * n) {
        x += lambda * dx;
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.x = x;
  out.at = *cur;
  return out;
}

double trajectory_distance(const ConfigSpace& q, const Trajectory& a, const Trajectory& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, q.distance(a.positions[k], b.positions[k]));
    d = std::max(d, sup(a.momenta[k] - b.momenta[k]));
  }
  return d;
}

std::vector<std::size_t> distinct_indices(const ConfigSpace& q, const std::vector<BvpSolution>& sols,
                                          double radius) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    bool fresh = true;
    for (auto j : kept) {
      if (trajectory_distance(q, sols[i].trajectory, sols[j].trajectory) < radius) {
        fresh = false;
        break;
      }
    }
    if (fresh) kept.push_back(i);
  }
  return kept;
}

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

Evaluator shooting_evaluator(const HamiltonianSystem& sys, const Vec& u0, const Vec& u1,
                             const ShootingConfig& cfg, const Mat& basis) {
  return [&sys, u0, u1, &cfg, basis](const Vec& c) -> std::optional<Evaluation> {
    const Vec p0 = basis * c;
    const auto res = integrate_span(sys, 0.0, 1.0, u0, p0, cfg.integrator, true);
    if (!res.completed()) return std::nullopt;
    const int r = sys.dim();
    Evaluation e;
    e.residual = sys.config.difference(res.positions.back(), u1);
    e.jacobian = res.jacobian.topRightCorner(r, r) * basis;
    if (!e.residual.allFinite() || !e.jacobian.allFinite()) return std::nullopt;
    return e;
  };
}

BvpSolution make_solution(const HamiltonianSystem& sys, const Vec& u0, const Vec& p0,
                          const NewtonOutcome& n, const ShootingConfig& cfg, int seed_index) {
  const auto flow = integrate_flow(sys, u0, p0, cfg.integrator);
  BvpSolution s{flow.trajectory(), n.x, p0, n.at.residual, sup(n.at.residual),
                condition_number(n.at.jacobian), false, seed_index};
  s.singular = s.condition > cfg.singular_condition;
  return s;
}

// Classifies a set of converged solutions; probes a null direction of any
// singular one to confirm a connected family.
void classify(BvpSolutionSet& set, const ConfigSpace& q, const ShootingConfig& cfg,
              const std::function<std::optional<NewtonOutcome>(const Vec&)>& resolve) {
  std::sort(set.solutions.begin(), set.solutions.end(),
            [](const BvpSolution& a, const BvpSolution& b) { return lex_less(a.p0, b.p0); });
  set.converged_seeds = static_cast<int>(set.solutions.size());
  if (set.solutions.empty()) {
    set.classification = BvpClass::NoSolution;
    return;
  }

  bool continuum = false;
  for (const auto& s : set.solutions) {
    if (!s.singular) continue;
    const double eps = 1e-2 * std::max(1.0, sup(s.unknowns));
    auto probe = resolve(s.unknowns);  // returns the Jacobian at the solution
    if (!probe) continue;
    const Vec v = null_direction(probe->at.jacobian);
    auto moved = resolve(s.unknowns + eps * v);
    if (!moved) continue;
    const double spread = sup(moved->x - s.unknowns);
    if (spread >= 0.5 * eps && condition_number(moved->at.jacobian) > cfg.singular_condition) {
      continuum = true;
      set.family_spread = std::max(set.family_spread, spread);
    }
  }

  const auto kept = distinct_indices(q, set.solutions, cfg.distinctness_radius);
  const auto kept_half = distinct_indices(q, set.solutions, 0.5 * cfg.distinctness_radius);
  set.isolation_stable = kept.size() == kept_half.size();
  std::vector<BvpSolution> distinct;
  for (auto i : kept) distinct.push_back(set.solutions[i]);
  set.solutions = std::move(distinct);

  if (continuum)
    set.classification = BvpClass::Continuum;
  else
    set.classification = set.solutions.size() == 1 ? BvpClass::Unique : BvpClass::MultipleIsolated;
}

}  // namespace

Mat momentum_basis(const HamiltonianSystem& sys, const Vec& u0) {
  if (sys.momentum_basis) return (*sys.momentum_basis)(u0);
  return Mat::Identity(sys.dim(), sys.dim());
}

std::vector<Vec> default_seeds(int dim, const ShootingConfig& cfg) {
  if (!cfg.seeds.empty()) return cfg.seeds;
  std::vector<Vec> seeds;
  const int n = cfg.seed_count;
  if (dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double x = n == 1 ? 0.0 : -cfg.seed_box + 2.0 * cfg.seed_box * i / (n - 1);
      seeds.push_back(Vec::Constant(1, x));
    }
    return seeds;
  }
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> dist(-cfg.seed_box, cfg.seed_box);
  for (int i = 0; i < n; ++i) {
    Vec s(dim);
    for (int j = 0; j < dim; ++j) s[j] = dist(rng);
    seeds.push_back(s);
  }
  return seeds;
}

ShootResidual shoot_residual(const HamiltonianSystem& sys, const Vec& u0, const Vec& p0, const Vec& u1,
                             const ShootingConfig& cfg) {
  const auto res = integrate_span(sys, 0.0, 1.0, u0, p0, cfg.integrator, true);
  if (!res.completed()) throw Error(ErrorKind::FlowIncomplete, res.status.describe());
  const int r = sys.dim();
  return {sys.config.difference(res.positions.back(), u1), res.jacobian.topRightCorner(r, r)};
}

std::optional<BvpSolution> solve_dirichlet_from(const HamiltonianSystem& sys, const Vec& u0,
                                                const Vec& u1, const Vec& seed,
                                                const ShootingConfig& cfg) {
  const Mat basis = momentum_basis(sys, u0);
  const auto eval = shooting_evaluator(sys, u0, u1, cfg, basis);
  const auto n = damped_newton(eval, seed, cfg.newton_tol, cfg.max_iter);
  if (!n.converged) return std::nullopt;
  return make_solution(sys, u0, basis * n.x, n, cfg, -1);
}

BvpSolutionSet solve_dirichlet(const HamiltonianSystem& sys, const Vec& u0, const Vec& u1,
                               const ShootingConfig& cfg) {
  cfg.validate();
  if (u0.size() != sys.dim() || u1.size() != sys.dim())
    throw Error(ErrorKind::DimensionMismatch, "endpoint dimension does not match " + sys.name);
  const Mat basis = momentum_basis(sys, u0);
  const auto eval = shooting_evaluator(sys, u0, u1, cfg, basis);
  const auto seeds = default_seeds(static_cast<int>(basis.cols()), cfg);

  BvpSolutionSet set;
  set.u0 = u0;
  set.u1 = u1;
  set.total_seeds = static_cast<int>(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto n = damped_newton(eval, seeds[i], cfg.newton_tol, cfg.max_iter);
    if (!n.converged) continue;
    set.solutions.push_back(make_solution(sys, u0, basis * n.x, n, cfg, static_cast<int>(i)));
  }
  classify(set, sys.config, cfg, [&](const Vec& x) -> std::optional<NewtonOutcome> {
    auto n = damped_newton(eval, x, cfg.newton_tol, cfg.max_iter);
    if (!n.converged) return std::nullopt;
    return n;
  });
  return set;
}

double hamilton_principal_function(const BvpSolutionSet& set, const HamiltonianSystem& sys,
                                   std::size_t branch) {
  if (branch >= set.solutions.size())
    throw Error(ErrorKind::NoSuchBranch, "branch " + std::to_string(branch) + " of " +
                                             std::to_string(set.solutions.size()));
  return action_functional(sys, set.solutions[branch].trajectory);
}

double hamilton_principal_function(const HamiltonianSystem& sys, const Vec& u0, const Vec& u1,
                                   const ShootingConfig& cfg, std::size_t branch) {
  return hamilton_principal_function(solve_dirichlet(sys, u0, u1, cfg), sys, branch);
}

BranchSensitivity branch_sensitivity(const HamiltonianSystem& sys, const Vec& u0, const Vec& u1,
                                     const BvpSolution& base, const ShootingConfig& cfg,
                                     double h_fd) {
  if (sys.momentum_basis)
    throw Error(ErrorKind::InvalidArgument, "branch continuation needs intrinsic coordinates");
  if (base.singular)
    throw Error(ErrorKind::BranchLost, "singular shooting Jacobian at the base solution");
  const int r = sys.dim();
  BranchSensitivity out;
  out.p0 = base.trajectory.momenta.front();
  out.p1 = base.trajectory.momenta.back();
  out.w = action_functional(sys, base.trajectory);
  out.dw_du0 = Vec::Zero(r);
  out.dw_du1 = Vec::Zero(r);
  out.dp0_du0 = Mat::Zero(r, r);
  out.dp0_du1 = Mat::Zero(r, r);
  out.dp1_du0 = Mat::Zero(r, r);
  out.dp1_du1 = Mat::Zero(r, r);

  const double jump_limit = 1e3 * h_fd;
  for (int side = 0; side < 2; ++side) {
    for (int j = 0; j < r; ++j) {
      double w_pm[2];
      Vec p0_pm[2], p1_pm[2];
      for (int s = 0; s < 2; ++s) {
        Vec a = u0, b = u1;
        (side == 0 ? a : b)[j] += (s == 0 ? h_fd : -h_fd);
        const auto sol = solve_dirichlet_from(sys, a, b, base.unknowns, cfg);
        if (!sol) throw Error(ErrorKind::BranchLost, "continuation did not converge");
        const double jump = sup(sol->unknowns - base.unknowns);
        out.max_p0_jump = std::max(out.max_p0_jump, jump);
        if (jump > jump_limit) throw Error(ErrorKind::BranchLost, "continuation jumped branches");
        w_pm[s] = action_functional(sys, sol->trajectory);
        p0_pm[s] = sol->trajectory.momenta.front();
        p1_pm[s] = sol->trajectory.momenta.back();
      }
      const double dw = (w_pm[0] - w_pm[1]) / (2 * h_fd);
      const Vec dp0 = (p0_pm[0] - p0_pm[1]) / (2 * h_fd);
      const Vec dp1 = (p1_pm[0] - p1_pm[1]) / (2 * h_fd);
      if (side == 0) {
        out.dw_du0[j] = dw;
        out.dp0_du0.col(j) = dp0;
        out.dp1_du0.col(j) = dp1;
      } else {
        out.dw_du1[j] = dw;
        out.dp0_du1.col(j) = dp0;
        out.dp1_du1.col(j) = dp1;
      }
    }
  }
  return out;
}

GeneratingFunctionDefects generating_function_check(const HamiltonianSystem& sys, const Vec& u0,
                                                    const Vec& u1, const ShootingConfig& cfg,
                                                    std::size_t branch, double h_fd) {
  const auto set = solve_dirichlet(sys, u0, u1, cfg);
  if (branch >= set.solutions.size())
    throw Error(ErrorKind::NoSuchBranch, "branch " + std::to_string(branch) + " of " +
                                             std::to_string(set.solutions.size()));
  const auto sens = branch_sensitivity(sys, u0, u1, set.solutions[branch], cfg, h_fd);
  const int r = sys.dim();
  Mat hess(2 * r, 2 * r);
  hess << -sens.dp0_du0, -sens.dp0_du1, sens.dp1_du0, sens.dp1_du1;
  GeneratingFunctionDefects d;
  d.defect_u1 = sup(sens.dw_du1 - sens.p1);
  d.defect_u0 = sup(sens.dw_du0 + sens.p0);
  d.symmetry_defect = (hess - hess.transpose()).lpNorm<Eigen::Infinity>();
  d.w = sens.w;
  return d;
}

TheoryReport classify_theory(const HamiltonianSystem& sys,
                             const std::vector<std::pair<Vec, Vec>>& endpoint_samples,
                             const ShootingConfig& cfg, double openness_probe) {
  if (endpoint_samples.empty()) throw Error(ErrorKind::InvalidArgument, "no endpoint samples");
  TheoryReport rep;
  bool all_unique = true;
  for (std::size_t i = 0; i < endpoint_samples.size(); ++i) {
    const auto& [u0, u1] = endpoint_samples[i];
    const auto set = solve_dirichlet(sys, u0, u1, cfg);
    PairVerdict pv{u0, u1, set.classification, static_cast<int>(set.solutions.size()), true};
    if (set.classification != BvpClass::Unique) all_unique = false;

    if (set.classification == BvpClass::Unique || set.classification == BvpClass::MultipleIsolated) {
      // Solutions must persist under small displacements of either endpoint.
      const auto& base = set.solutions.front();
      const int r = sys.dim();
      for (int side = 0; side < 2 && pv.open_neighbourhood; ++side) {
        for (int j = 0; j < r && pv.open_neighbourhood; ++j) {
          for (double sgn : {1.0, -1.0}) {
            Vec a = u0, b = u1;
            (side == 0 ? a : b)[j] += sgn * openness_probe;
            if (sys.momentum_basis) {
              a.normalize();
              b.normalize();
            }
            if (!solve_dirichlet_from(sys, a, b, base.unknowns, cfg)) {
              pv.open_neighbourhood = false;
              break;
            }
          }
        }
      }
      if (!set.isolation_stable && !rep.witness) {
        rep.witness = i;
        rep.evidence = "solutions not isolated: distinct count changes when the radius is halved";
      }
    }
    if (!rep.witness) {
      if (set.classification == BvpClass::Continuum) {
        rep.witness = i;
        rep.evidence = "Continuum: a connected family of solutions with singular shooting Jacobian";
      } else if (set.classification == BvpClass::NoSolution) {
        rep.witness = i;
        rep.evidence = "NoSolution: no trajectory joins the endpoints";
      } else if (!pv.open_neighbourhood) {
        rep.witness = i;
        rep.evidence = "reachable endpoint set is not open near this pair";
      }
    }
    rep.pairs.push_back(std::move(pv));
  }
  if (rep.witness)
    rep.verdict = TheoryVerdict::Neither;
  else
    rep.verdict = all_unique ? TheoryVerdict::Dirichlet : TheoryVerdict::LocallyDirichlet;
  return rep;
}

BvpSolutionSet solve_with_lagrangian_boundary(const HamiltonianSystem& sys,
                                              const LagrangianBoundary& boundary,
                                              const ShootingConfig& cfg) {
  if (const auto* fixed = std::get_if<FixedEndpoints>(&boundary))
    return solve_dirichlet(sys, fixed->u0, fixed->u1, cfg);
  cfg.validate();
  const auto& graph = std::get<GraphBoundary>(boundary);
  const int r = sys.dim();

  // Unknowns x = (u0, p0); residual (p1 - dF/du1, p0 + dF/du0).
  const Evaluator eval = [&](const Vec& x) -> std::optional<Evaluation> {
    const Vec u0 = x.head(r), p0 = x.tail(r);
    const auto res = integrate_span(sys, 0.0, 1.0, u0, p0, cfg.integrator, true);
    if (!res.completed()) return std::nullopt;
    const Vec& u1 = res.positions.back();
    const Vec& p1 = res.momenta.back();
    const auto [g0, g1] = graph.gradient(u0, u1);

    // Second derivatives of F by centered differences of its gradient.
    Mat g0_u0(r, r), g0_u1(r, r), g1_u0(r, r), g1_u1(r, r);
    for (int j = 0; j < r; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(u0[j]));
      const double k = 1e-6 * std::max(1.0, std::abs(u1[j]));
      Vec a = u0, b = u0;
      a[j] += h;
      b[j] -= h;
      auto ga = graph.gradient(a, u1), gb = graph.gradient(b, u1);
      g0_u0.col(j) = (ga.first - gb.first) / (2 * h);
      g1_u0.col(j) = (ga.second - gb.second) / (2 * h);
      Vec c = u1, d = u1;
      c[j] += k;
      d[j] -= k;
      auto gc = graph.gradient(u0, c), gd = graph.gradient(u0, d);
      g0_u1.col(j) = (gc.first - gd.first) / (2 * k);
      g1_u1.col(j) = (gc.second - gd.second) / (2 * k);
    }
    const Mat& jf = res.jacobian;
    const Mat a = jf.topLeftCorner(r, r), b = jf.topRightCorner(r, r);
    const Mat c = jf.bottomLeftCorner(r, r), d = jf.bottomRightCorner(r, r);

    Evaluation e;
    e.residual.resize(2 * r);
    e.residual << p1 - g1, p0 + g0;
    e.jacobian.resize(2 * r, 2 * r);
    e.jacobian << c - g1_u0 - g1_u1 * a, d - g1_u1 * b,
        g0_u0 + g0_u1 * a, Mat::Identity(r, r) + g0_u1 * b;
    if (!e.residual.allFinite() || !e.jacobian.allFinite()) return std::nullopt;
    return e;
  };

  const auto seeds = default_seeds(2 * r, cfg);
  BvpSolutionSet set;
  set.total_seeds = static_cast<int>(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i].size() != 2 * r)
      throw Error(ErrorKind::DimensionMismatch, "graph-boundary seeds are (u0, p0) vectors");
    const auto n = damped_newton(eval, seeds[i], cfg.newton_tol, cfg.max_iter);
    if (!n.converged) continue;
    const Vec u0 = n.x.head(r), p0 = n.x.tail(r);
    set.solutions.push_back(make_solution(sys, u0, p0, n, cfg, static_cast<int>(i)));
  }
  classify(set, sys.config, cfg, [&](const Vec& x) -> std::optional<NewtonOutcome> {
    auto n = damped_newton(eval, x, cfg.newton_tol, cfg.max_iter);
    if (!n.converged) return std::nullopt;
    return n;
  });
  if (!set.solutions.empty()) {
    set.u0 = set.solutions.front().trajectory.positions.front();
    set.u1 = set.solutions.front().trajectory.positions.back();
  }
  return set;
}

}  // namespace hamfield
