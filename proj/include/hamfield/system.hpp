#pragma once

// Hamiltonian systems on T*Q, curves (u(t), p(t)) on a grid over [0,1], the
// action functional, the Euler-Lagrange residual and the boundary data
// (u0, p0; u1, p1) with its canonical 1-form and symplectic form.

#include "hamfield/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hamfield {

enum class CoordinateKind { Linear, Angular };

struct ConfigSpace {
  std::vector<CoordinateKind> kinds;

  ConfigSpace() = default;
  explicit ConfigSpace(int dim, CoordinateKind kind = CoordinateKind::Linear);
  explicit ConfigSpace(std::vector<CoordinateKind> kinds);

  int dim() const { return static_cast<int>(kinds.size()); }
  bool is_angular(int a) const { return kinds[a] == CoordinateKind::Angular; }

  // Difference a - b of two Q-points; angular components wrapped to (-pi, pi].
  Vec difference(const Vec& a, const Vec& b) const;
  double distance(const Vec& a, const Vec& b) const;
};

using ScalarFn = std::function<double(double t, const Vec& u, const Vec& p)>;
using GradientFn = std::function<Vec(double t, const Vec& u, const Vec& p)>;
// Hessian of H in the (u, p) ordering, 2r x 2r.
using HessianFn = std::function<Mat(double t, const Vec& u, const Vec& p)>;
using FlowFn = std::function<std::pair<Vec, Vec>(double t, const Vec& u0, const Vec& p0)>;
// Jacobian of (u(t), p(t)) with respect to (u0, p0), 2r x 2r.
using FlowJacobianFn = std::function<Mat(double t, const Vec& u0, const Vec& p0)>;
// Columns span the admissible initial momenta at u (embedded configuration spaces).
using MomentumBasisFn = std::function<Mat(const Vec& u)>;

struct HamiltonianSystem {
  std::string name;
  ConfigSpace config;
  ScalarFn hamiltonian;
  GradientFn grad_u;
  GradientFn grad_p;
  HessianFn hessian;  // optional; finite differences of the gradients otherwise
  bool separable = false;
  bool autonomous = true;

  std::optional<FlowFn> analytic_flow;
  std::optional<FlowJacobianFn> analytic_flow_jacobian;
  // When set, integrators sample the analytic flow instead of stepping.
  bool use_analytic_flow = false;
  std::optional<MomentumBasisFn> momentum_basis;

  int dim() const { return config.dim(); }
};

struct PhaseVelocity {
  Vec du;
  Vec dp;
};

PhaseVelocity hamiltonian_vector_field(const HamiltonianSystem& sys, double t, const Vec& u,
                                       const Vec& p);

// Symmetric 2r x 2r Hessian of H; analytic when provided.
Mat hamiltonian_hessian(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p);

// Jacobian of the Hamiltonian vector field (du, dp) with respect to (u, p).
Mat vector_field_jacobian(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p);

// Largest relative mismatch between the supplied gradients and centered
// differences of the Hamiltonian at (t, u, p).
double gradient_consistency(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                            double step = 1e-5);

class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes);
  static TimeGrid uniform(int intervals);

  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  int intervals() const { return static_cast<int>(nodes_.size()) - 1; }
  double operator[](std::size_t k) const { return nodes_[k]; }

  // Trapezoidal weights.
  std::vector<double> quadrature_weights() const;

 private:
  std::vector<double> nodes_;
};

struct Trajectory {
  TimeGrid grid;
  std::vector<Vec> positions;
  std::vector<Vec> momenta;

  Trajectory(TimeGrid grid, std::vector<Vec> positions, std::vector<Vec> momenta);

  int dim() const { return static_cast<int>(positions.front().size()); }
  std::size_t size() const { return grid.size(); }

  static Trajectory sample(const TimeGrid& grid, const std::function<Vec(double)>& u,
                           const std::function<Vec(double)>& p);
};

// Second-order discrete derivative: three-point centered stencil at interior
// nodes, three-point one-sided stencil at the endpoints. Works on
// non-uniform grids.
std::vector<Vec> discrete_derivative(const TimeGrid& grid, const std::vector<Vec>& values);

double action_functional(const HamiltonianSystem& sys, const Trajectory& chi);

struct ElResidual {
  std::vector<Vec> res_u;  // u' - dH/dp
  std::vector<Vec> res_p;  // p' + dH/du
  double norm = 0.0;       // max over nodes of the sup-norm
};

ElResidual el_residual(const HamiltonianSystem& sys, const Trajectory& chi);

// Discrete pairing of the EL residual with a variation (du, dp), trapezoidal:
// sum_k w_k [res_u . dp - res_p . du].
double el_pairing(const HamiltonianSystem& sys, const Trajectory& chi,
                  const std::vector<Vec>& du, const std::vector<Vec>& dp);

struct BoundaryPoint {
  Vec u0, p0, u1, p1;
};

struct BoundaryTangent {
  Vec du0, dp0, du1, dp1;

  // Layout (du0, dp0, du1, dp1) as one 4r-vector.
  Vec stacked() const;
  static BoundaryTangent from_stacked(const Vec& v);
};

BoundaryPoint boundary_projection(const Trajectory& chi);

// alpha = p1 du1 - p0 du0.
double alpha_eval(const BoundaryPoint& bp, const BoundaryTangent& v);

// dS(chi)[du, dp] by centered differences against EL pairing + alpha.
struct FundamentalFormula {
  double ds = 0.0;
  double el_pairing = 0.0;
  double boundary = 0.0;
  double defect = 0.0;  // |ds - el_pairing - boundary|
};

FundamentalFormula fundamental_formula(const HamiltonianSystem& sys, const Trajectory& chi,
                                       const std::vector<Vec>& du, const std::vector<Vec>& dp,
                                       double h_fd = 1e-6);

// omega = d(alpha) evaluated on a pair of boundary tangents.
double omega_eval(const BoundaryTangent& v, const BoundaryTangent& w);

}  // namespace hamfield
