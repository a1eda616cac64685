#include "hamfield/selftest.hpp"

#include "hamfield/constraints.hpp"
#include "hamfield/example_systems.hpp"
#include "hamfield/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace hamfield {

int SelftestReport::failures() const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.pass; }));
}

namespace {

struct Runner {
  SelftestReport& rep;
  double scale;

  void run(const std::string& group, const std::string& name, const std::string& desc, double tol,
           const std::function<double()>& measure) {
    CheckResult c{group, name, desc, 0.0, tol * scale, false, {}};
    try {
      c.measured = measure();
      c.pass = std::isfinite(c.measured) && c.measured <= c.tolerance;
    } catch (const std::exception& e) {
      c.measured = std::numeric_limits<double>::quiet_NaN();
      c.error = e.what();
    }
    rep.checks.push_back(std::move(c));
  }
};

Vec v1(double x) { return Vec::Constant(1, x); }

// Smooth pseudo-random curve and variation for the fundamental formula.
struct RandomCurve {
  double a, b, c, d, f;
  Vec u(double t) const { return v1(a + b * std::sin(c * t + d)); }
  Vec p(double t) const { return v1(f * std::cos(c * t) + a * t); }
};

}  // namespace

SelftestReport run_selftest(const SelftestOptions& opts) {
  SelftestReport rep;
  rep.seed = opts.seed;
  rep.strict = opts.strict;
  Runner run{rep, opts.strict ? 1e-6 : 1.0};
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto rvec = [&](int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = unif(rng);
    return v;
  };

  // Bundled analytic facts.
  std::vector<std::pair<std::string, ExampleSystem>> examples;
  for (const auto& name : example_names()) examples.emplace_back(name, make_example(name));
  examples.emplace_back("cotangent-lift[X=u]", make_cotangent_lift(linear_field(1, 1.0)));
  for (const auto& [name, ex] : examples)
    for (const auto& fact : ex.facts) run.run("fact:" + name, fact.key, fact.description, fact.tolerance, fact.measure);

  // system-core
  run.run("system-core", "omega-antisymmetry", "omega(v, w) + omega(w, v) = 0", 1e-14, [&] {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      Vec a(8), b(8);
      for (int j = 0; j < 8; ++j) a[j] = unif(rng), b[j] = unif(rng);
      const auto v = BoundaryTangent::from_stacked(a), w = BoundaryTangent::from_stacked(b);
      worst = std::max(worst, std::abs(omega_eval(v, w) + omega_eval(w, v)));
    }
    return worst;
  });
  for (const auto& [name, ex] : examples) {
    if (ex.system.use_analytic_flow) continue;
    run.run("system-core", "gradient-consistency:" + name, "gradients match centered differences of H", 1e-6, [&] {
      double worst = 0.0;
      const int r = ex.system.dim();
      for (const auto& [u, p] : random_phase_points(r, 5, 1.5, rng())) worst = std::max(worst, gradient_consistency(ex.system, 0.0, u, p));
      return worst;
    });
  }
  run.run("system-core", "fundamental-formula", "dS = EL pairing + alpha on a pendulum curve (N = 2000)", 1e-6, [&] {
    const auto pend = make_pendulum().system;
    const RandomCurve c{unif(rng), unif(rng), 1 + std::abs(unif(rng)), unif(rng), unif(rng)};
    const RandomCurve v{unif(rng), unif(rng), 1 + std::abs(unif(rng)), unif(rng), unif(rng)};
    const auto grid = TimeGrid::uniform(2000);
    const auto chi = Trajectory::sample(grid, [&](double t) { return c.u(t); }, [&](double t) { return c.p(t); });
    std::vector<Vec> du, dp;
    for (double t : grid.nodes()) du.push_back(v.u(t)), dp.push_back(v.p(t));
    return fundamental_formula(pend, chi, du, dp).defect;
  });

  // integrators
  const IntegratorConfig im;
  for (const char* name : {"free-particle", "pendulum", "cotangent-lift"}) {
    run.run("integrators", std::string("symplecticity:") + name, "implicit midpoint flow Jacobian is symplectic", 1e-9, [&, name] {
      const auto sys = make_example(name).system;
      double worst = 0.0;
      for (const auto& [u, p] : random_phase_points(1, 3, 1.0, rng())) worst = std::max(worst, symplecticity_defect(flow_jacobian(sys, u, p, im)));
      return worst;
    });
  }
  run.run("integrators", "energy:pendulum", "|H(1) - H(0)| over [0,1] at h = 1e-3", 1e-6, [&] {
    const auto sys = make_pendulum().system;
    const Vec u0 = v1(0.7), p0 = v1(0.4);
    const auto f = integrate_flow(sys, u0, p0, im);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.times.size(); ++k)
      worst = std::max(worst, std::abs(sys.hamiltonian(f.times[k], f.positions[k], f.momenta[k]) - sys.hamiltonian(0, u0, p0)));
    return worst;
  });

  // lagrangian-verifier
  run.run("lagrangian-verifier", "isotropy:pendulum", "omega vanishes on graph(phi_1)", 1e-8, [&] {
    const auto r = isotropy_defect_flow(make_pendulum().system, random_phase_points(1, 5, 2.0, rng()), im);
    return r.rank_estimate == 2 ? r.max_defect : 1.0;
  });
  run.run("lagrangian-verifier", "isotropy-bvp:free-particle", "omega vanishes on Pi(EL) from boundary continuation", 1e-6, [&] {
    std::vector<std::pair<Vec, Vec>> pairs{{v1(0), v1(2)}, {v1(-1), v1(0.5)}};
    const auto r = isotropy_defect_bvp(make_free_particle().system, pairs, ShootingConfig{});
    return r.rank_estimate == 2 ? r.max_defect : 1.0;
  });

  // constraints
  const auto circle = circle_constraint();
  const auto ident = identity_constraint(2);
  run.run("constraints", "dsigma:circle", "dsigma matches differences of sigma", 1e-6,
          [&] { return dsigma_consistency(circle, v1(unif(rng))); });
  run.run("constraints", "kernel-dimension", "dim ker Omega0 = r + k", 0.0, [&] {
    const auto g = gotay_step(make_planar_system(), circle, {Vec::Zero(2), circle.sigma(v1(0)), Vec::Zero(2), v1(0)});
    return std::abs(double(g.kernel_basis.cols()) - 3.0);
  });
  run.run("constraints", "solvability", "kernel conditions reproduce p - Sigma(e) and Lambda^T dSigma", 1e-12, [&] {
    const ExtendedState s{rvec(2), rvec(2), rvec(2), v1(0.3)};
    const auto g = gotay_step(make_planar_system(), circle, s);
    return std::max((g.phi - (s.p - circle.sigma(s.e))).lpNorm<Eigen::Infinity>(),
                    (g.psi - polar_constraint_residual(circle, s.e, s.lambda)).lpNorm<Eigen::Infinity>());
  });
  run.run("constraints", "identity-equivalence", "identity Sigma reproduces the unconstrained flow", 1e-10, [&] {
    const auto sys = make_planar_system();
    Vec u0(2), e0(2);
    u0 << 0.2, -0.1;
    e0 << 0.5, 1.5;
    const auto c = integrate_constrained(sys, ident, u0, e0, im);
    const auto f = integrate_flow(sys, u0, e0, im);
    if (!c.flow.completed()) return 1.0;
    return std::max((c.flow.positions.back() - f.positions.back()).lpNorm<Eigen::Infinity>(),
                    (c.flow.momenta.back() - f.momenta.back()).lpNorm<Eigen::Infinity>());
  });
  run.run("constraints", "descends", "H = |p|^2/2 descends to the reduced space", 1e-10, [&] {
    const Vec e = v1(0.4);
    return check_hamiltonian_descends(make_planar_system(), circle, {{Vec::Zero(2), circle.sigma(e), Vec::Zero(2), e}});
  });
  return rep;
}

}  // namespace hamfield
