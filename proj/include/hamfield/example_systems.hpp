#pragma once

// Bundled Hamiltonian systems with closed-form facts that the numerical
// stack is checked against.

#include "hamfield/boundary_solver.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hamfield {

// A fact is a measured defect that must stay at or below its tolerance.
struct AnalyticFact {
  std::string key;
  std::string description;
  double tolerance = 0.0;
  std::function<double()> measure;
};

struct ExampleSystem {
  HamiltonianSystem system;
  std::vector<AnalyticFact> facts;
};

struct VectorField {
  std::string name;
  int dim = 1;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  // Flow of X and its spatial derivative, when known in closed form.
  std::optional<std::function<Vec(double, const Vec&)>> flow;
  std::optional<std::function<Mat(double, const Vec&)>> flow_derivative;
  std::optional<Vec> constant;  // set for constant fields
  bool complete = true;
};

VectorField constant_field(const Vec& c);
// X(u) = rate * u componentwise.
VectorField linear_field(int dim, double rate);

ExampleSystem make_free_particle(double m = 1.0);

ExampleSystem make_quartic(double m = 1.0);

// Zero-energy solutions of the quartic H = p^2/2m - m u^4/4: p = sign m u^2/sqrt(2).
// sign = +1 is the growing branch for u0 > 0, sign = -1 the decaying one.
struct QuarticZeroEnergy {
  double m = 1.0;
  double u0 = 1.0;
  int sign = +1;

  double p0() const;
  double u(double t) const;
  double p(double t) const;
  // Time at which the solution leaves every compact set (infinity if never).
  double escape_time() const;
};

ExampleSystem make_pendulum(double m = 1.0, double k = 1.0);

ExampleSystem make_sphere_geodesics();
// Orthonormal basis of the tangent plane at a unit vector u.
Mat sphere_tangent_basis(const Vec& u);

ExampleSystem make_cotangent_lift(const VectorField& x);

ExampleSystem make_lambda_family(const VectorField& x, double lambda);

struct LambdaRow {
  double lambda = 0.0;
  bool solved = false;
  std::string failure;
  double p0 = 0.0;  // first momentum component of the branch closest to zero
  double w = 0.0;
  double second_order_residual = 0.0;
};

struct TopologicalLimitReport {
  std::vector<LambdaRow> rows;
  // log-log slope of |p0| against lambda over solved rows with p0 != 0.
  std::optional<double> p0_slope;
  // sup distance between the last solved trajectory and the flow line of X.
  std::optional<double> distance_to_flow_line;
};

// Residual of the second-order equation obeyed by the u-component of H_lambda
// trajectories: u'' = X_b dX^b/du^a + dX^a/du^b u'^b - dX^b/du^a u'_b.
double lambda_second_order_residual(const VectorField& x, const Trajectory& chi);

TopologicalLimitReport topological_limit_study(const VectorField& x, const std::vector<double>& lambdas,
                                               const Vec& u0, const Vec& u1,
                                               const ShootingConfig& cfg);

// Registry used by the command line: free-particle, quartic, pendulum, sphere,
// cotangent-lift, lambda-family, and planar (H = kinetic/2 |p|^2 + slope u^1 on
// R^2, the test system for momentum constraints).
// Parameters: m, k, lambda, c (constant field), linear_rate (X = rate u), kinetic, slope.
std::vector<std::string> example_names();
ExampleSystem make_example(const std::string& name, const std::map<std::string, double>& params = {});

}  // namespace hamfield
