// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
// Exit status is the number of failed criteria.

#include "hamfield/constraints.hpp"
#include "hamfield/example_systems.hpp"
#include "hamfield/lagrangian.hpp"
#include "hamfield/scenario.hpp"
#include "hamfield/selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace hamfield;

namespace {

const double kPi = std::numbers::pi;

Vec v1(double x) { return Vec::Constant(1, x); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Collects sub-checks of one criterion.
struct Criterion {
  std::ostringstream log;
  bool ok = true;

  void check(const std::string& what, bool pass, double measured) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", measured);
    log << (log.tellp() > 0 ? "; " : "") << what << "=" << buf << (pass ? "" : " [x]");
    ok = ok && pass;
  }
  void check(const std::string& what, bool pass, const std::string& measured) {
    log << (log.tellp() > 0 ? "; " : "") << what << "=" << measured << (pass ? "" : " [x]");
    ok = ok && pass;
  }
};

int failures = 0;

void report(int id, const char* title, const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.check("exception", false, std::string(e.what()));
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!c.ok) ++failures;
  std::printf("%s criterion %d (%s) [%.1fs]: %s\n", c.ok ? "PASS" : "FAIL", id, title, wall, c.log.str().c_str());
  std::fflush(stdout);
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a, sy += b, sxx += a * a, sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<std::pair<Vec, Vec>> random_pairs(int n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<std::pair<Vec, Vec>> out;
  for (int i = 0; i < n; ++i) out.push_back({v1(d(rng)), v1(d(rng))});
  return out;
}

}  // namespace

int main() {
  report(1, "free particle", [](Criterion& c) {
    const auto fp = make_free_particle().system;
    const auto set = solve_dirichlet(fp, v1(0), v1(2), {});
    c.check("class", set.classification == BvpClass::Unique, to_string(set.classification));
    const double p0 = set.solutions.empty() ? NAN : set.solutions[0].p0[0];
    c.check("|p0-2|", std::abs(p0 - 2) <= 1e-8, std::abs(p0 - 2));
    const double w = hamilton_principal_function(set, fp, 0);
    c.check("|W-2|", std::abs(w - 2) <= 1e-6, std::abs(w - 2));
    const auto g = generating_function_check(fp, v1(0), v1(2), {}, 0);
    const double gd = std::max(g.defect_u0, g.defect_u1);
    c.check("dW defect", gd <= 1e-6, gd);
    double d1 = 0, d2 = 0;
    for (const auto& [u0, u1] : random_pairs(10, -2, 2, 101)) {
      const auto s = solve_dirichlet(fp, u0, u1, {});
      if (s.solutions.empty()) {
        d1 = d2 = INFINITY;
        break;
      }
      const auto bp = boundary_projection(s.solutions[0].trajectory);
      d1 = std::max(d1, std::abs(bp.p1[0] - bp.p0[0]));
      d2 = std::max(d2, std::abs(bp.p0[0] - (u1[0] - u0[0])));
    }
    c.check("max|p1-p0|", d1 <= 1e-10, d1);
    c.check("max|p0-m(u1-u0)|", d2 <= 1e-8, d2);
  });

  report(2, "quartic blow-up", [](Criterion& c) {
    const auto q = make_quartic().system;
    const auto f = integrate_flow(q, v1(4), v1(8), {});
    c.check("status", f.status.kind == FlowStatus::Kind::BlowUp, to_string(f.status.kind));
    c.check("t_escape", f.status.kind == FlowStatus::Kind::BlowUp && f.status.t >= 0.45 && f.status.t <= 0.55, f.status.t);
    IntegratorConfig fine;
    fine.step = 5e-4;
    const auto g = integrate_flow(q, v1(1), v1(0.5), fine);
    double sup = 0;
    for (std::size_t k = 0; k < g.times.size(); ++k) sup = std::max(sup, std::abs(g.positions[k][0] - 2 / (2 - g.times[k])));
    c.check("sup|u-2/(2-t)|", g.completed() && sup <= 1e-6, sup);
  });

  report(3, "symplecticity", [](Criterion& c) {
    IntegratorConfig im;
    im.step = 1e-3;
    for (const char* name : {"free-particle", "pendulum", "cotangent-lift"}) {
      const auto sys = make_example(name).system;
      double worst = 0;
      for (const auto& [u, p] : random_phase_points(1, 10, 2.0, 303)) worst = std::max(worst, symplecticity_defect(flow_jacobian(sys, u, p, im)));
      c.check(name, worst <= 1e-9, worst);
    }
  });

  report(4, "isotropy", [](Criterion& c) {
    const auto pts = random_phase_points(1, 10, 2.0, 404);
    const std::vector<std::pair<std::string, HamiltonianSystem>> systems{
        {"free-particle", make_free_particle().system},
        {"pendulum", make_pendulum().system},
        {"cotangent-lift", make_cotangent_lift(constant_field(v1(1))).system},
        {"cotangent-lift[X=u]", make_cotangent_lift(linear_field(1, 1.0)).system},
        {"lambda-family", make_lambda_family(linear_field(1, 1.0), 0.5).system}};
    for (const auto& [name, sys] : systems) {
      const auto r = isotropy_defect_flow(sys, pts, {});
      c.check(name, r.applicable == 10 && r.max_defect <= 1e-8 && r.rank_estimate == 2, r.max_defect);
    }
    // refinement: the implicit midpoint defect sits at roundoff, so the slope is
    // measured on the non-symplectic explicit midpoint reference scheme
    std::vector<double> hs, ds;
    const auto few = random_phase_points(1, 3, 1.0, 405);
    for (double h : {0.02, 0.01, 0.005, 0.0025}) {
      IntegratorConfig rk;
      rk.scheme = Scheme::ExplicitMidpoint;
      rk.step = h;
      hs.push_back(h);
      ds.push_back(isotropy_defect_flow(make_pendulum().system, few, rk).max_defect);
    }
    const double s = slope(hs, ds);
    c.check("slope", std::abs(s - 2) <= 0.2, s);
  });

  report(5, "pendulum", [](Criterion& c) {
    const auto pend = make_pendulum().system;
    const auto cls = classify_theory(pend, random_pairs(5, -kPi, kPi, 505), {});
    c.check("verdict", cls.verdict == TheoryVerdict::LocallyDirichlet, to_string(cls.verdict));
    const auto set = solve_dirichlet(pend, v1(0), v1(kPi / 2), {});
    c.check("branches", set.solutions.size() >= 2, double(set.solutions.size()));
    double closest = INFINITY;
    for (std::size_t a = 0; a < set.solutions.size(); ++a)
      for (std::size_t b = a + 1; b < set.solutions.size(); ++b)
        closest = std::min(closest, std::abs(hamilton_principal_function(set, pend, a) - hamilton_principal_function(set, pend, b)));
    c.check("min|dW|", closest >= 1e-3, closest);
  });

  report(6, "sphere", [](Criterion& c) {
    const auto sph = make_sphere_geodesics().system;
    Vec n(3), e(3);
    n << 0, 0, 1;
    e << std::sqrt(0.5), 0.5, 0.5;
    const auto anti = solve_dirichlet(sph, n, -n, {});
    c.check("antipodal", anti.classification == BvpClass::Continuum, to_string(anti.classification));
    double cond = 0;
    for (const auto& s : anti.solutions) cond = std::max(cond, s.condition);
    c.check("cond", cond > 1e10, cond);
    const auto gen = solve_dirichlet(sph, n, e, {});
    const bool isolated = gen.classification == BvpClass::Unique || gen.classification == BvpClass::MultipleIsolated;
    c.check("generic", isolated && gen.isolation_stable, to_string(gen.classification));
  });

  report(7, "cotangent lift", [](Criterion& c) {
    const auto x = linear_field(1, 1.0);
    const auto lift = make_cotangent_lift(x).system;
    IntegratorConfig cfg;
    cfg.step = 1e-4;
    double err = 0;
    for (const auto& [u, p] : random_phase_points(1, 5, 1.0, 707)) {
      const auto f = integrate_flow(lift, u, p, cfg);
      err = std::max({err, std::abs(f.positions.back()[0] - u[0] * std::numbers::e),
                      std::abs(f.momenta.back()[0] - p[0] / std::numbers::e)});
    }
    c.check("|phi1-(u0 e,p0/e)| h=1e-4", err <= 1e-8, err);
    const auto off = solve_dirichlet(lift, v1(1), v1(2), {});
    c.check("off-graph", off.classification == BvpClass::NoSolution, to_string(off.classification));
    const auto iso = isotropy_defect_flow(lift, random_phase_points(1, 10, 2.0, 708), {});
    c.check("lagrangian", iso.lagrangian(1e-8), iso.max_defect);
    const auto cls = classify_theory(lift, random_pairs(5, -1, 1, 709), {});
    c.check("verdict", cls.verdict == TheoryVerdict::Neither, to_string(cls.verdict));
  });

  report(8, "topological limit", [](Criterion& c) {
    const auto rep = topological_limit_study(constant_field(v1(1)), {1, 0.5, 0.25, 0.125}, v1(0), v1(2), {});
    double rel = 0, res = 0;
    for (const auto& row : rep.rows) {
      rel = std::max(rel, row.solved ? std::abs(row.p0 * row.lambda - 1) : INFINITY);
      res = std::max(res, row.solved ? row.second_order_residual : INFINITY);
    }
    c.check("rel|p0-1/lambda|", rel <= 1e-6, rel);
    const double s = rep.p0_slope.value_or(NAN);
    c.check("slope", std::abs(s + 1) <= 0.05, s);
    c.check("2nd-order residual", res <= 1e-6, res);
  });

  report(9, "constraints", [](Criterion& c) {
    IntegratorConfig im;
    const auto sys = make_planar_system(1.0, 0.5);
    const Vec u0 = v2(0.2, -0.3), e0 = v2(0.7, -1.1);
    const auto con = integrate_constrained(sys, identity_constraint(2), u0, e0, im);
    const auto un = integrate_flow(sys, u0, e0, im);
    double d = con.flow.completed() ? 0 : INFINITY;
    for (std::size_t k = 0; con.flow.completed() && k < un.times.size(); ++k)
      d = std::max({d, (con.flow.positions[k] - un.positions[k]).lpNorm<Eigen::Infinity>(),
                    (con.flow.momenta[k] - un.momenta[k]).lpNorm<Eigen::Infinity>()});
    c.check("identity", d <= 1e-10, d);

    const auto circle = circle_constraint();
    const auto free_h = make_planar_system();
    const auto g = gotay_step(free_h, circle, {v2(0, 0), v2(1, 0), v2(0, 0), v1(0)});
    c.check("gotay", g.terminated && g.stability == GotayReport::Stability::Stable && g.D.norm() <= 1e-12, g.D.norm());
    const auto cf = integrate_constrained(free_h, circle, v2(0, 0), v1(0), im);
    c.check("drift", cf.flow.completed() && cf.constraint_drift == 0.0, cf.constraint_drift);
    c.check("|dH|", cf.energy_drift <= 1e-8, cf.energy_drift);

    const auto lin = make_planar_system(0.0, 1.0);  // H = u^1
    const auto bad = gotay_step(lin, circle, {v2(0, 0), v2(1, 0), v2(0, 0), v1(0)});
    const auto uf = integrate_constrained(lin, circle, v2(0, 0), v1(0), im);
    c.check("H=u1", bad.stability == GotayReport::Stability::SecondaryConstraint && uf.unstable_at.has_value(),
            to_string(bad.stability));
    const ExtendedState probe{v2(0.3, 0.1), circle.sigma(v1(0.4)), v2(0, 0), v1(0.4)};
    const double d0 = check_hamiltonian_descends(free_h, circle, {probe});
    c.check("descends", d0 <= 1e-10, d0);
    // at e = 0 the polar direction is Lambda = (1, 0), so the derivative of u^1 along it is 1
    const ExtendedState at0{v2(0.3, 0.1), circle.sigma(v1(0)), v2(0, 0), v1(0)};
    const double d1 = check_hamiltonian_descends(make_planar_system(1.0, 1.0), circle, {at0});
    c.check("not descends", std::abs(d1 - 1) <= 1e-6, d1);
  });

  report(10, "fundamental formula", [](Criterion& c) {
    const auto pend = make_pendulum().system;
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> d(-1, 1);
    const auto grid = TimeGrid::uniform(1999);
    double worst = 0;
    for (int i = 0; i < 5; ++i) {
      const double a = d(rng), b = d(rng), w = 1 + std::abs(d(rng)), ph = d(rng), q = d(rng), r = d(rng);
      const double va = d(rng), vb = d(rng), vw = 1 + std::abs(d(rng));
      const auto chi = Trajectory::sample(grid, [&](double t) { return v1(a + b * std::sin(w * t + ph)); },
                                          [&](double t) { return v1(q * std::cos(w * t) + r * t); });
      std::vector<Vec> du, dp;
      for (double t : grid.nodes()) du.push_back(v1(va * std::cos(vw * t))), dp.push_back(v1(vb * t * t + va));
      worst = std::max(worst, fundamental_formula(pend, chi, du, dp, 1e-6).defect);
    }
    c.check("max defect (N=2000)", worst <= 1e-6, worst);
  });

  report(11, "self-test", [](Criterion& c) {
    const auto a = run_selftest(), b = run_selftest();
    c.check("failures", a.ok(), double(a.failures()));
    c.check("reproducible", selftest_to_json(a).dump() == selftest_to_json(b).dump(), double(a.checks.size()));
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
