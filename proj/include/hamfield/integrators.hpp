#pragma once

// Fixed-step initial-value integration of Hamilton's equations together with
// the tangent (variational) flow of the same one-step map.

#include "hamfield/system.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hamfield {

enum class Scheme {
  ImplicitMidpoint,
  StormerVerlet,
  // Explicit second-order Runge-Kutta. Not symplectic; kept as a reference
  // scheme for convergence studies of symplecticity defects.
  ExplicitMidpoint,
};

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct IntegratorConfig {
  Scheme scheme = Scheme::ImplicitMidpoint;
  double step = 1e-3;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  double blowup_threshold = 1e8;
  // Failed steps are retried on halved substeps down to step / 2^max_halvings.
  int max_halvings = 24;
  // Steps changing the state by more than this fraction of max(1, |(u, p)|)
  // are retried on halved substeps as well.
  double max_step_change = 0.5;

  void validate() const;
};

struct StepResult {
  Vec u;
  Vec p;
  Mat jacobian;  // d(u', p') / d(u, p); empty unless requested
  int newton_iterations = 0;
};

// Each stepper throws Error(NewtonFailure) when the implicit solve does not converge.
StepResult step_implicit_midpoint(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                                  double h, const IntegratorConfig& cfg = {},
                                  bool with_jacobian = false);
StepResult step_stormer_verlet(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                               double h, bool with_jacobian = false);
StepResult step_explicit_midpoint(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                                  double h, bool with_jacobian = false);

StepResult step(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p, double h,
                const IntegratorConfig& cfg, bool with_jacobian = false);

struct FlowStatus {
  enum class Kind { Completed, BlowUp, NewtonFailure };
  Kind kind = Kind::Completed;
  double t = 1.0;  // escape time for BlowUp, failure time for NewtonFailure

  bool completed() const { return kind == Kind::Completed; }
  std::string describe() const;
};

const char* to_string(FlowStatus::Kind k);

struct FlowResult {
  std::vector<double> times;
  std::vector<Vec> positions;
  std::vector<Vec> momenta;
  FlowStatus status;
  Mat jacobian;  // flow Jacobian over the span; set only when requested and completed

  bool completed() const { return status.completed(); }
  // Requires a completed run over [0, 1].
  Trajectory trajectory() const;
};

// Integrates from t0 to t1 on a uniform grid with ceil((t1 - t0) / h) steps.
FlowResult integrate_span(const HamiltonianSystem& sys, double t0, double t1, const Vec& u0,
                          const Vec& p0, const IntegratorConfig& cfg, bool with_jacobian = false);

FlowResult integrate_flow(const HamiltonianSystem& sys, const Vec& u0, const Vec& p0,
                          const IntegratorConfig& cfg);

// D(phi_t_end) at (u0, p0) from the variational equations of the chosen
// scheme. Throws Error(FlowIncomplete) if the flow does not reach t_end.
Mat flow_jacobian(const HamiltonianSystem& sys, const Vec& u0, const Vec& p0,
                  const IntegratorConfig& cfg, double t_end = 1.0);

Mat canonical_skew(int r);

// max |J^T S J - S| with S the canonical skew matrix.
double symplecticity_defect(const Mat& jacobian);

}  // namespace hamfield
