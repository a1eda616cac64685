#include "hamfield/constraints.hpp"
#include "hamfield/example_systems.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace hamfield;
using testing::v1;
using testing::vec;

namespace {

HamiltonianSystem linear_potential(double slope) { return make_planar_system(1.0, slope); }

// H = |p|^2/2 + u^1: kinetic plus a potential in u only
HamiltonianSystem kinetic_plus_linear() { return make_planar_system(1.0, 1.0); }

}  // namespace

TEST_CASE("constraint specs") {
  const auto c = circle_constraint();
  CHECK(c.r_dim == 2);
  CHECK(c.k_dim == 1);
  for (double e : {0.0, 0.4, 2.0}) CHECK(dsigma_consistency(c, v1(e)) <= 1e-6);
  CHECK(dsigma_consistency(identity_constraint(3), vec({0.1, 0.2, 0.3})) <= 1e-6);
  CHECK(make_constraint("identity", 2).k_dim == 2);
  CHECK_THROWS_AS(make_constraint("circle", 3), Error);
  CHECK_THROWS_AS(make_constraint("torus", 2), Error);
  CHECK(constraint_names().size() == 2);
}

TEST_CASE("extended action") {
  const auto grid = TimeGrid::uniform(40);
  const auto ident = identity_constraint(1);
  const auto fp = make_free_particle().system;
  const auto chi = Trajectory::sample(grid, [](double t) { return v1(std::sin(t)); }, [](double t) { return v1(t * t); });
  std::vector<Vec> zero(grid.size(), v1(0)), lam2(grid.size(), v1(2)), e_eq_p;
  for (double t : grid.nodes()) e_eq_p.push_back(v1(t * t));
  CHECK(extended_action(fp, ident, chi, lam2, e_eq_p) == doctest::Approx(action_functional(fp, chi)).epsilon(1e-15));

  HamiltonianSystem zero_h = fp;
  zero_h.hamiltonian = [](double, const Vec&, const Vec&) { return 0.0; };
  const auto still = Trajectory::sample(grid, [](double) { return v1(0); }, [](double) { return v1(1); });
  CHECK(extended_action(zero_h, ident, still, lam2, zero) == doctest::Approx(2.0));

  const auto sol = Trajectory::sample(grid, [](double t) { return v1(2 * t); }, [](double) { return v1(2); });
  std::vector<Vec> e2(grid.size(), v1(2));
  CHECK(extended_action(fp, ident, sol, zero, e2) == doctest::Approx(hamilton_principal_function(fp, v1(0), v1(2), {}, 0)).epsilon(1e-9));

  std::vector<Vec> short_path(3, v1(0));
  CHECK_THROWS_AS(extended_action(fp, ident, chi, short_path, e_eq_p), Error);
}

TEST_CASE("constrained vector field and polar constraint") {
  const auto circle = circle_constraint();
  const auto sys = make_planar_system();
  const auto v = constrained_vector_field(sys, circle, {vec({0.3, -0.2}), vec({1, 0}), vec({0.1, 0}), v1(0)});
  CHECK(testing::sup(v.du - vec({0.9, 0})) <= 1e-15);
  CHECK(testing::sup(v.dp) == 0.0);

  const auto fp = make_free_particle().system;
  const auto w = constrained_vector_field(fp, identity_constraint(1), {v1(0.1), v1(0.5), v1(2), v1(0.5)});
  CHECK(w.du[0] == doctest::Approx(-1.5));
  CHECK(w.dp[0] == 0.0);
  const auto h = hamiltonian_vector_field(fp, 0, v1(0.1), v1(0.5));
  const auto z = constrained_vector_field(fp, identity_constraint(1), {v1(0.1), v1(0.5), v1(0), v1(0.5)});
  CHECK(z.du == h.du);
  CHECK(z.dp == h.dp);

  CHECK(polar_constraint_residual(circle, v1(0), vec({1, 0}))[0] == doctest::Approx(0.0));
  CHECK(polar_constraint_residual(circle, v1(0), vec({0, 1}))[0] == doctest::Approx(1.0));
  CHECK(polar_constraint_residual(identity_constraint(2), vec({3, 4}), vec({0.5, -2})) == vec({0.5, -2}));

  // H0 = H - Lambda . (p - Sigma)
  const ExtendedState s{vec({0, 0}), vec({1, 1}), vec({2, 0}), v1(0)};
  CHECK(extended_hamiltonian(sys, circle, s) == doctest::Approx(1.0 - 2.0 * (1 - 1)));
  const ExtendedState off{vec({0, 0}), vec({2, 1}), vec({2, 0}), v1(0)};
  CHECK(extended_hamiltonian(sys, circle, off) == doctest::Approx(2.5 - 2.0));
}

TEST_CASE("presymplectic form and Gotay step") {
  const Mat om = presymplectic_form(2, 1);
  CHECK(om.rows() == 7);
  CHECK((om + om.transpose()).norm() == 0.0);
  CHECK(om(0, 2) == 1.0);
  CHECK(om(2, 0) == -1.0);

  const auto circle = circle_constraint();
  // free motion on the circle constraint
  const auto g = gotay_step(make_planar_system(), circle, {vec({0, 0}), vec({1, 0}), vec({0, 0}), v1(0)});
  CHECK(g.kernel_basis.cols() == 3);
  CHECK(g.kernel_residual <= 1e-10);
  CHECK(g.stability == GotayReport::Stability::Stable);
  CHECK(g.terminated);
  CHECK(g.D.norm() <= 1e-12);
  CHECK(testing::sup(g.phi) <= 1e-12);

  // H = u^1 cannot be tangent to N
  const auto bad = gotay_step(linear_potential(1.0), circle, {vec({0, 0}), vec({1, 0}), vec({0, 0}), v1(0)});
  CHECK(bad.stability == GotayReport::Stability::SecondaryConstraint);
  CHECK_FALSE(bad.terminated);
  CHECK(std::abs(bad.violating_direction[0]) > 0.5);

  // identity: kernel conditions give p = e and Lambda = 0
  const auto id = gotay_step(make_planar_system(1.0, 0.3), identity_constraint(2),
                             {vec({0.1, 0.2}), vec({1, 2}), vec({0.5, 0.5}), vec({1, 1.5})});
  CHECK(testing::sup(id.phi - vec({0, 0.5})) <= 1e-12);
  CHECK(testing::sup(id.psi - vec({0.5, 0.5})) <= 1e-12);
  CHECK(id.stability == GotayReport::Stability::Stable);
  CHECK(testing::sup(id.D - vec({-0.3, 0})) <= 1e-12);
}

TEST_CASE("stability check and polar basis") {
  const auto circle = circle_constraint();
  const ExtendedState on{vec({0, 0}), vec({1, 0}), vec({0, 0}), v1(0)};
  CHECK(stability_check(make_planar_system(), circle, on) == doctest::Approx(0.0));
  CHECK(stability_check(linear_potential(1.0), circle, on) == doctest::Approx(1.0));
  CHECK(stability_check(linear_potential(1.0), identity_constraint(2), {vec({0, 0}), vec({1, 0}), vec({0, 0}), vec({1, 0})}) == 0.0);
  const ExtendedState off{vec({0, 0}), vec({0, 1}), vec({0, 0}), v1(0)};
  CHECK_THROWS_AS(stability_check(make_planar_system(), circle, off), Error);

  const Mat b = polar_basis(circle, v1(0.3));
  REQUIRE(b.cols() == 1);
  CHECK(std::abs(b.col(0).dot(circle.dsigma(v1(0.3)).col(0))) <= 1e-14);
  CHECK(polar_basis(identity_constraint(2), vec({0, 0})).cols() == 0);
}

TEST_CASE("constrained integration") {
  const auto circle = circle_constraint();
  IntegratorConfig cfg;
  auto r = integrate_constrained(make_planar_system(), circle, vec({0, 0}), v1(0), cfg);
  REQUIRE(r.flow.completed());
  CHECK(!r.unstable_at);
  CHECK(testing::sup(r.flow.positions.back() - vec({1, 0})) <= 1e-12);
  for (const auto& e : r.e) CHECK(std::abs(e[0]) <= 1e-14);
  CHECK(r.constraint_drift == 0.0);
  CHECK(r.energy_drift <= 1e-8);

  const auto u = integrate_constrained(linear_potential(1.0), circle, vec({0, 0}), v1(0), cfg);
  REQUIRE(u.unstable_at.has_value());
  CHECK(*u.unstable_at == 0.0);

  // identity constraint reproduces the unconstrained flow
  const auto sys = make_planar_system(1.0, 0.7);
  const auto c = integrate_constrained(sys, identity_constraint(2), vec({0.2, 0.1}), vec({-0.4, 1}), cfg);
  const auto f = integrate_flow(sys, vec({0.2, 0.1}), vec({-0.4, 1}), cfg);
  REQUIRE(c.flow.completed());
  for (std::size_t k = 0; k < f.times.size(); ++k) {
    CHECK(testing::sup(c.flow.positions[k] - f.positions[k]) <= 1e-10);
    CHECK(testing::sup(c.flow.momenta[k] - f.momenta[k]) <= 1e-10);
  }

  // a polar gauge shifts u' without changing p; polar residual stays zero
  const auto g = integrate_constrained(make_planar_system(), circle, vec({0, 0}), v1(0), cfg,
                                       LambdaPath([](double) { return vec({0.5, 0}); }));
  REQUIRE(g.flow.completed());
  CHECK(g.polar_residual <= 1e-14);
  CHECK(testing::sup(g.flow.positions.back() - vec({0.5, 0})) <= 1e-12);
}

TEST_CASE("Hamiltonian descends to the reduced space") {
  const auto circle = circle_constraint();
  std::vector<ExtendedState> probes;
  for (double e : {0.0, 0.7, 2.1}) probes.push_back({vec({0.3, -0.4}), circle.sigma(v1(e)), vec({0, 0}), v1(e)});
  CHECK(check_hamiltonian_descends(make_planar_system(), circle, probes) <= 1e-10);
  CHECK(check_hamiltonian_descends(kinetic_plus_linear(), circle, {probes[0]}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(check_hamiltonian_descends(kinetic_plus_linear(), identity_constraint(2),
                                   {{vec({0, 0}), vec({1, 2}), vec({0, 0}), vec({1, 2})}}) <= 1e-10);
  CHECK_THROWS_AS(check_hamiltonian_descends(make_planar_system(), circle,
                                             {{vec({0, 0}), vec({3, 0}), vec({0, 0}), v1(0)}}),
                  Error);
}
