#pragma once

// Momentum constraints p = Sigma(e): extended action with multipliers Lambda,
// the presymplectic constraint algorithm on (u, p, Lambda, e), stability,
// constrained integration and the reduction certificate.

#include "hamfield/integrators.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hamfield {

struct ConstraintSpec {
  std::string name;
  int r_dim = 1;
  int k_dim = 1;
  std::function<Vec(const Vec& e)> sigma;
  std::function<Mat(const Vec& e)> dsigma;  // r x k, dSigma_a / de^i
  double rank_tol = 1e-10;
};

// Sigma(e) = e on R^r.
ConstraintSpec identity_constraint(int r);
// Sigma(e) = (cos e, sin e) on R^2, K = R.
ConstraintSpec circle_constraint();
// "identity" (dimension r) or "circle".
ConstraintSpec make_constraint(const std::string& name, int r);
std::vector<std::string> constraint_names();

// max |dsigma - centered differences of sigma| at e.
double dsigma_consistency(const ConstraintSpec& spec, const Vec& e, double step = 1e-5);

// H = kinetic/2 |p|^2 + slope u^1 on R^2.
HamiltonianSystem make_planar_system(double kinetic = 1.0, double slope = 0.0);

struct ExtendedState {
  Vec u, p, lambda, e;
};

double extended_action(const HamiltonianSystem& sys, const ConstraintSpec& spec, const Trajectory& chi,
                       const std::vector<Vec>& lambda_path, const std::vector<Vec>& e_path);

// (dH/dp - Lambda, -dH/du).
PhaseVelocity constrained_vector_field(const HamiltonianSystem& sys, const ConstraintSpec& spec,
                                       const ExtendedState& state);

// Lambda^T dSigma/de.
Vec polar_constraint_residual(const ConstraintSpec& spec, const Vec& e, const Vec& lambda);

// Extended Hamiltonian H0 = H(u, p) - Lambda . (p - Sigma(e)), the sign that
// reproduces u' = dH/dp - Lambda under i_Gamma Omega0 = dH0.
double extended_hamiltonian(const HamiltonianSystem& sys, const ConstraintSpec& spec,
                            const ExtendedState& state);

// Omega0 = du^a ^ dp_a on coordinates ordered (u, p, Lambda, e).
Mat presymplectic_form(int r, int k);

struct GotayReport {
  enum class Stability { Stable, SecondaryConstraint };

  Mat omega0;
  Mat kernel_basis;  // columns
  double kernel_residual = 0.0;
  Vec phi;  // p - Sigma(e), recovered from the kernel solvability conditions
  Vec psi;  // Lambda^T dSigma/de, likewise
  Stability stability = Stability::Stable;
  Vec D;                    // minimal-norm solution of dSigma D = -dH/du
  Vec C;                    // minimal-norm solution of dSigma^T C = -M D
  double tangency_residual = 0.0;
  double c_residual = 0.0;
  Vec violating_direction;  // component of -dH/du outside the range of dSigma
  bool terminated = false;
  std::string note = "minimal-norm least-squares choice of D and C (one gauge among many)";
};
const char* to_string(GotayReport::Stability s);

GotayReport gotay_step(const HamiltonianSystem& sys, const ConstraintSpec& spec, const ExtendedState& state);

// Orthonormal basis of the Lambda satisfying the polar constraint at e (columns).
Mat polar_basis(const ConstraintSpec& spec, const Vec& e);

// max over a polar basis of |Lambda . dH/du|. Throws OffConstraint when
// |p - Sigma(e)| > 1e-8.
double stability_check(const HamiltonianSystem& sys, const ConstraintSpec& spec, const ExtendedState& state);

using LambdaPath = std::function<Vec(double t)>;

struct ConstrainedFlowResult {
  FlowResult flow;  // positions u, momenta p = Sigma(e)
  std::vector<Vec> e;
  std::optional<double> unstable_at;
  double energy_drift = 0.0;      // max |H(t) - H(0)|
  double constraint_drift = 0.0;  // max |p - Sigma(e)|, zero by construction
  double polar_residual = 0.0;    // max |Lambda^T dSigma| along the supplied gauge
  std::string gauge = "lambda-zero";
};

// Implicit midpoint on (u, e) with u' = dH/dp - Lambda, e' = D, p = Sigma(e).
// Without a gauge path Lambda = 0.
ConstrainedFlowResult integrate_constrained(const HamiltonianSystem& sys, const ConstraintSpec& spec,
                                            const Vec& u0, const Vec& e0, const IntegratorConfig& cfg,
                                            const std::optional<LambdaPath>& gauge = std::nullopt);

// max over probes and polar directions of the centered-difference derivative
// of H along Lambda^a d/du^a. Throws OffConstraint for probes off N.
double check_hamiltonian_descends(const HamiltonianSystem& sys, const ConstraintSpec& spec,
                                  const std::vector<ExtendedState>& probes, double step = 1e-6);

}  // namespace hamfield
