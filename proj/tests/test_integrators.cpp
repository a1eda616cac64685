#include "hamfield/example_systems.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hamfield;
using testing::v1;

namespace {

// Escape time of u'' = u^3 from (u0, p0), u0 > 0, p0 > 0, by Simpson's rule
// after substituting u = u0 / s.
double quartic_escape_oracle(double u0, double p0) {
  const auto f = [&](double s) {
    const double s4 = s * s * s * s;
    return u0 / std::sqrt(p0 * p0 * s4 + 0.5 * std::pow(u0, 4) * (1 - s4));
  };
  const int n = 20000;
  double acc = f(0) + f(1);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4 : 2) * f(double(i) / n);
  return acc / (3.0 * n);
}

double slope(const std::vector<double>& h, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(e[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

IntegratorConfig with_step(double h, Scheme s = Scheme::ImplicitMidpoint) {
  IntegratorConfig c;
  c.step = h;
  c.scheme = s;
  return c;
}

}  // namespace

TEST_CASE("implicit midpoint single steps") {
  const auto fp = make_free_particle().system;
  const auto s = step_implicit_midpoint(fp, 0, v1(0), v1(1), 0.5);
  CHECK(s.u[0] == 0.5);
  CHECK(s.p[0] == 1.0);

  const auto pend = make_pendulum().system;
  const auto tiny = step_implicit_midpoint(pend, 0, v1(0.3), v1(-0.2), 1e-14);
  CHECK(std::abs(tiny.u[0] - 0.3) < 1e-13);
  CHECK(std::abs(tiny.p[0] + 0.2) < 1e-13);

  // Brute-force fixed-point iteration of z' = z + h X((z + z')/2).
  const double h = 0.1;
  double u1 = 0, p1 = 1;
  for (int i = 0; i < 200; ++i) {
    const double um = 0.5 * (0 + u1), pm = 0.5 * (1 + p1);
    u1 = 0 + h * pm;
    p1 = 1 - h * std::sin(um);
  }
  const auto m = step_implicit_midpoint(pend, 0, v1(0), v1(1), h);
  CHECK(std::abs(m.u[0] - u1) <= 1e-12);
  CHECK(std::abs(m.p[0] - p1) <= 1e-12);
}

TEST_CASE("Stormer-Verlet single steps") {
  const auto pend = make_pendulum().system;
  const auto s = step_stormer_verlet(pend, 0, v1(0), v1(1), 0.1);
  CHECK(s.u[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.p[0] == doctest::Approx(1 - 0.05 * std::sin(0.1)).epsilon(1e-15));

  const auto fp = make_free_particle(2.0).system;
  const auto f = step_stormer_verlet(fp, 0, v1(1), v1(3), 0.7);
  CHECK(f.u[0] == doctest::Approx(1 + 3 * 0.7 / 2));
  CHECK(f.p[0] == 3.0);

  const auto q = make_quartic().system;
  const auto a = step_stormer_verlet(q, 0, v1(1), v1(0.5), 0.01);
  const auto b = step_implicit_midpoint(q, 0, v1(1), v1(0.5), 0.01);
  CHECK(std::abs(a.u[0] - b.u[0]) <= 10 * std::pow(0.01, 3));
  CHECK(std::abs(a.p[0] - b.p[0]) <= 10 * std::pow(0.01, 3));

  const auto lift = make_cotangent_lift(linear_field(1, 1.0)).system;
  CHECK_THROWS_AS(step_stormer_verlet(lift, 0, v1(1), v1(1), 0.1), Error);
}

TEST_CASE("step Jacobians agree with differences of the step map") {
  const auto pend = make_pendulum(1.0, 2.0).system;
  for (Scheme sc : {Scheme::ImplicitMidpoint, Scheme::StormerVerlet, Scheme::ExplicitMidpoint}) {
    const auto cfg = with_step(0.05, sc);
    const auto base = step(pend, 0, v1(0.4), v1(0.3), 0.05, cfg, true);
    Mat fd(2, 2);
    const double e = 1e-6;
    for (int j = 0; j < 2; ++j) {
      Vec u = v1(0.4), p = v1(0.3), um = u, pm = p;
      (j == 0 ? u : p)[0] += e;
      (j == 0 ? um : pm)[0] -= e;
      const auto a = step(pend, 0, u, p, 0.05, cfg), b = step(pend, 0, um, pm, 0.05, cfg);
      fd(0, j) = (a.u[0] - b.u[0]) / (2 * e);
      fd(1, j) = (a.p[0] - b.p[0]) / (2 * e);
    }
    CHECK_MESSAGE((fd - base.jacobian).lpNorm<Eigen::Infinity>() < 1e-8, to_string(sc));
  }
}

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::ImplicitMidpoint, Scheme::StormerVerlet, Scheme::ExplicitMidpoint})
    CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scheme_from_string("rk4"), Error);
  IntegratorConfig bad;
  bad.step = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("flows of the bundled examples") {
  const auto f = integrate_flow(make_free_particle().system, v1(0), v1(1), {});
  CHECK(f.completed());
  CHECK(f.positions.back()[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.momenta.back()[0] == 1.0);
  CHECK(f.times.size() == 1001);

  const auto lift = make_cotangent_lift(linear_field(1, 1.0)).system;
  const auto g = integrate_flow(lift, v1(1), v1(1), {});
  CHECK(g.completed());
  // midpoint global error for X = u is about h^2 e / 12
  CHECK(std::abs(g.positions.back()[0] - std::numbers::e) <= 1e-6);
  CHECK(std::abs(g.momenta.back()[0] - 1 / std::numbers::e) <= 1e-6);
  const auto g4 = integrate_flow(lift, v1(1), v1(1), with_step(1e-4));
  CHECK(std::abs(g4.positions.back()[0] - std::numbers::e) <= 1e-8);
  CHECK(std::abs(g4.momenta.back()[0] - 1 / std::numbers::e) <= 1e-8);
}

TEST_CASE("quartic blow-up") {
  const auto q = make_quartic().system;
  const auto f = integrate_flow(q, v1(4), v1(8), {});
  CHECK(f.status.kind == FlowStatus::Kind::BlowUp);
  CHECK_THROWS_AS(f.trajectory(), Error);
  const double oracle = quartic_escape_oracle(4, 8);
  CHECK(oracle == doctest::Approx(0.3765).epsilon(1e-3));
  CHECK(std::abs(f.status.t - oracle) <= 1e-3);
  // the recorded path never crosses the pole
  for (const auto& u : f.positions) CHECK(u[0] >= 4.0);

  // Zero-energy growing branch: escape time decreases with u0 and approaches sqrt(2)/u0.
  double previous = 10;
  for (double u0 : {1.5, 2.0, 3.0, 4.0, 6.0}) {
    const QuarticZeroEnergy z{1.0, u0, +1};
    const auto r = integrate_flow(q, v1(u0), v1(z.p0()), with_step(1e-4));
    REQUIRE(r.status.kind == FlowStatus::Kind::BlowUp);
    CHECK(r.status.t < previous);
    previous = r.status.t;
    CHECK(std::abs(r.status.t - z.escape_time()) / z.escape_time() <= 0.05);
  }
}

TEST_CASE("flow Jacobians") {
  const Mat jf = flow_jacobian(make_free_particle().system, v1(0.2), v1(0.9), {});
  CHECK((jf - (Mat(2, 2) << 1, 1, 0, 1).finished()).lpNorm<Eigen::Infinity>() < 1e-14);

  const auto lift = make_cotangent_lift(linear_field(1, 1.0)).system;
  const Mat jl = flow_jacobian(lift, v1(1), v1(1), with_step(1e-4));
  CHECK(jl(0, 0) == doctest::Approx(std::numbers::e).epsilon(1e-8));
  CHECK(jl(1, 1) == doctest::Approx(1 / std::numbers::e).epsilon(1e-8));
  CHECK(std::abs(jl(0, 1)) < 1e-12);
  CHECK(std::abs(jl(1, 0)) < 1e-12);

  const Mat j0 = flow_jacobian(make_pendulum().system, v1(0.5), v1(0.5), {}, 0.0);
  CHECK(j0 == Mat::Identity(2, 2));

  CHECK_THROWS_AS(flow_jacobian(make_quartic().system, v1(4), v1(8), {}), Error);

  // variational Jacobian against differences of the whole flow
  const auto pend = make_pendulum().system;
  const Mat jp = flow_jacobian(pend, v1(0.3), v1(0.8), {});
  const double e = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Vec u = v1(0.3), p = v1(0.8), um = u, pm = p;
    (j == 0 ? u : p)[0] += e;
    (j == 0 ? um : pm)[0] -= e;
    const auto a = integrate_flow(pend, u, p, {}), b = integrate_flow(pend, um, pm, {});
    CHECK((a.positions.back()[0] - b.positions.back()[0]) / (2 * e) == doctest::Approx(jp(0, j)).epsilon(1e-7));
    CHECK((a.momenta.back()[0] - b.momenta.back()[0]) / (2 * e) == doctest::Approx(jp(1, j)).epsilon(1e-7));
  }
}

TEST_CASE("symplecticity defect") {
  CHECK(symplecticity_defect(Mat::Identity(4, 4)) == 0.0);
  CHECK_THROWS_AS(symplecticity_defect(Mat::Identity(3, 3)), Error);
  CHECK_THROWS_AS(symplecticity_defect(Mat::Identity(2, 4)), Error);
  CHECK(symplecticity_defect(flow_jacobian(make_free_particle().system, v1(0), v1(1), {})) <= 1e-14);
  for (const auto& name : example_names()) {
    if (name == "quartic" || name == "sphere") continue;
    const auto sys = make_example(name).system;
    const int r = sys.dim();
    const auto j = flow_jacobian(sys, Vec::Constant(r, 0.4), Vec::Constant(r, -0.3), {});
    CHECK_MESSAGE(symplecticity_defect(j) <= 100 * IntegratorConfig{}.newton_tol, name);
  }
  const auto sv = flow_jacobian(make_pendulum().system, v1(1), v1(0.5), with_step(1e-2, Scheme::StormerVerlet));
  CHECK(symplecticity_defect(sv) <= 1e-12);
  const auto rk = flow_jacobian(make_pendulum().system, v1(1), v1(0.5), with_step(1e-2, Scheme::ExplicitMidpoint));
  CHECK(symplecticity_defect(rk) > 1e-7);
}

TEST_CASE("energy error is second order for both symplectic schemes") {
  const auto pend = make_pendulum().system;
  const Vec u0 = v1(1.0), p0 = v1(0.5);
  const double h0 = pend.hamiltonian(0, u0, p0);
  for (Scheme sc : {Scheme::ImplicitMidpoint, Scheme::StormerVerlet}) {
    std::vector<double> hs, errs;
    for (double h : {0.04, 0.02, 0.01, 0.005, 0.0025}) {
      const auto f = integrate_flow(pend, u0, p0, with_step(h, sc));
      hs.push_back(h);
      errs.push_back(std::abs(pend.hamiltonian(1, f.positions.back(), f.momenta.back()) - h0));
    }
    CHECK_MESSAGE(slope(hs, errs) == doctest::Approx(2.0).epsilon(0.1), to_string(sc));
  }
}

TEST_CASE("flow composition over [0, 1/2] and [1/2, 1]") {
  const auto pend = make_pendulum().system;
  const IntegratorConfig cfg;
  const auto whole = integrate_span(pend, 0, 1, v1(0.2), v1(1.1), cfg, true);
  const auto a = integrate_span(pend, 0, 0.5, v1(0.2), v1(1.1), cfg, true);
  const auto b = integrate_span(pend, 0.5, 1, a.positions.back(), a.momenta.back(), cfg, true);
  CHECK(std::abs(whole.positions.back()[0] - b.positions.back()[0]) < 1e-12);
  CHECK(std::abs(whole.momenta.back()[0] - b.momenta.back()[0]) < 1e-12);
  CHECK((whole.jacobian - b.jacobian * a.jacobian).lpNorm<Eigen::Infinity>() < 1e-11);
}

TEST_CASE("integrated curves have second-order Euler-Lagrange residual") {
  const auto pend = make_pendulum().system;
  std::vector<double> hs, res;
  for (int n : {100, 200, 400, 800, 1600}) {
    const auto f = integrate_flow(pend, v1(0.5), v1(0.7), with_step(1.0 / n));
    hs.push_back(1.0 / n);
    res.push_back(el_residual(pend, f.trajectory()).norm);
  }
  CHECK(slope(hs, res) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("sphere flow uses the closed form") {
  const auto sph = make_sphere_geodesics().system;
  Vec u0(3), p0(3);
  u0 << 1, 0, 0;
  p0 << 0, 0.5, 0;
  const auto f = integrate_flow(sph, u0, p0, {});
  CHECK(f.completed());
  CHECK(f.positions.back()[0] == doctest::Approx(std::cos(0.5)));
  CHECK(f.positions.back()[1] == doctest::Approx(std::sin(0.5)));
  for (const auto& u : f.positions) CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-14));
  // closed-form Jacobian against differences of the closed-form flow
  Vec p1(3);
  p1 << 0.2, 1.1, -0.4;
  const Vec uu = sphere_tangent_basis(u0).col(0);
  const Mat j = (*sph.analytic_flow_jacobian)(0.8, uu, p1);
  const double e = 1e-6;
  for (int c = 0; c < 6; ++c) {
    Vec a = uu, b = p1, am = uu, bm = p1;
    (c < 3 ? a : b)[c % 3] += e;
    (c < 3 ? am : bm)[c % 3] -= e;
    const auto [ua, pa] = (*sph.analytic_flow)(0.8, a, b);
    const auto [ub, pb] = (*sph.analytic_flow)(0.8, am, bm);
    Vec col(6);
    col << (ua - ub) / (2 * e), (pa - pb) / (2 * e);
    CHECK((col - j.col(c)).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}
