#include "hamfield/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hamfield {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::ImplicitMidpoint: return "implicit-midpoint";
    case Scheme::StormerVerlet: return "stormer-verlet";
    case Scheme::ExplicitMidpoint: return "explicit-midpoint";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "implicit-midpoint") return Scheme::ImplicitMidpoint;
  if (name == "stormer-verlet") return Scheme::StormerVerlet;
  if (name == "explicit-midpoint") return Scheme::ExplicitMidpoint;
  throw Error(ErrorKind::InvalidArgument, "unknown scheme '" + name + "'");
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0 && step <= 1.0)) throw Error(ErrorKind::InvalidArgument, "step must lie in (0, 1]");
  if (!(newton_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "newton_tol must be positive");
  if (newton_max_iter < 1) throw Error(ErrorKind::InvalidArgument, "newton_max_iter must be >= 1");
  if (!(blowup_threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "blowup_threshold must be positive");
  if (max_halvings < 0) throw Error(ErrorKind::InvalidArgument, "max_halvings must be >= 0");
  if (!(max_step_change > 0.0)) throw Error(ErrorKind::InvalidArgument, "max_step_change must be positive");
}

namespace {

Vec stack(const Vec& u, const Vec& p) {
  Vec z(u.size() + p.size());
  z << u, p;
  return z;
}

Vec field(const HamiltonianSystem& sys, double t, const Vec& z) {
  const auto r = z.size() / 2;
  const auto v = hamiltonian_vector_field(sys, t, z.head(r), z.tail(r));
  return stack(v.du, v.dp);
}

Mat field_jacobian(const HamiltonianSystem& sys, double t, const Vec& z) {
  const auto r = z.size() / 2;
  return vector_field_jacobian(sys, t, z.head(r), z.tail(r));
}

double sup_norm(const Vec& u, const Vec& p) {
  return std::max(u.lpNorm<Eigen::Infinity>(), p.lpNorm<Eigen::Infinity>());
}

}  // namespace

StepResult step_implicit_midpoint(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                                  double h, const IntegratorConfig& cfg, bool with_jacobian) {
  const auto r = u.size();
  const Vec z = stack(u, p);
  const double tm = t + 0.5 * h;
  const auto id = Mat::Identity(2 * r, 2 * r);

  Vec zn = z;
  try {
    zn = z + h * field(sys, t, z);
  } catch (const Error&) {
    zn = z;
  }
  if (!zn.allFinite()) zn = z;

  int it = 0;
  bool converged = false;
  for (; it < cfg.newton_max_iter; ++it) {
    const Vec mid = 0.5 * (z + zn);
    const Vec g = zn - z - h * field(sys, tm, mid);
    const Mat jg = id - 0.5 * h * field_jacobian(sys, tm, mid);
    const Vec dz = jg.partialPivLu().solve(-g);
    if (!dz.allFinite()) break;
    zn += dz;
    if (dz.lpNorm<Eigen::Infinity>() <= cfg.newton_tol * std::max(1.0, zn.lpNorm<Eigen::Infinity>())) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged || !zn.allFinite()) {
    std::ostringstream os;
    os << "implicit midpoint did not converge at t=" << t << " with h=" << h;
    throw Error(ErrorKind::NewtonFailure, os.str());
  }

  StepResult out{zn.head(r), zn.tail(r), Mat(), it};
  if (with_jacobian) {
    // Implicit function theorem on z' = z + h X((z + z')/2).
    const Mat a = field_jacobian(sys, tm, 0.5 * (z + zn));
    out.jacobian = (id - 0.5 * h * a).partialPivLu().solve(id + 0.5 * h * a);
  }
  return out;
}

StepResult step_stormer_verlet(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                               double h, bool with_jacobian) {
  if (!sys.separable)
    throw Error(ErrorKind::NotSeparable, sys.name + " is not declared separable");
  const auto r = u.size();
  const Vec p_half = p - 0.5 * h * sys.grad_u(t, u, p);
  const Vec u_new = u + h * sys.grad_p(t + 0.5 * h, u, p_half);
  const Vec p_new = p_half - 0.5 * h * sys.grad_u(t + h, u_new, p_half);
  if (!u_new.allFinite() || !p_new.allFinite())
    throw Error(ErrorKind::NonFinite, "Stormer-Verlet step");

  StepResult out{u_new, p_new, Mat(), 0};
  if (with_jacobian) {
    const auto id = Mat::Identity(2 * r, 2 * r);
    Mat kick1 = id, drift = id, kick2 = id;
    kick1.bottomLeftCorner(r, r) = -0.5 * h * hamiltonian_hessian(sys, t, u, p).topLeftCorner(r, r);
    drift.topRightCorner(r, r) =
        h * hamiltonian_hessian(sys, t + 0.5 * h, u, p_half).bottomRightCorner(r, r);
    kick2.bottomLeftCorner(r, r) =
        -0.5 * h * hamiltonian_hessian(sys, t + h, u_new, p_half).topLeftCorner(r, r);
    out.jacobian = kick2 * drift * kick1;
  }
  return out;
}

StepResult step_explicit_midpoint(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                                  double h, bool with_jacobian) {
  const auto r = u.size();
  const Vec z = stack(u, p);
  const Vec k1 = field(sys, t, z);
  const Vec mid = z + 0.5 * h * k1;
  const Vec zn = z + h * field(sys, t + 0.5 * h, mid);
  if (!zn.allFinite()) throw Error(ErrorKind::NonFinite, "explicit midpoint step");
  StepResult out{zn.head(r), zn.tail(r), Mat(), 0};
  if (with_jacobian) {
    const auto id = Mat::Identity(2 * r, 2 * r);
    out.jacobian = id + h * field_jacobian(sys, t + 0.5 * h, mid) *
                            (id + 0.5 * h * field_jacobian(sys, t, z));
  }
  return out;
}

StepResult step(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p, double h,
                const IntegratorConfig& cfg, bool with_jacobian) {
  switch (cfg.scheme) {
    case Scheme::ImplicitMidpoint: return step_implicit_midpoint(sys, t, u, p, h, cfg, with_jacobian);
    case Scheme::StormerVerlet: return step_stormer_verlet(sys, t, u, p, h, with_jacobian);
    case Scheme::ExplicitMidpoint: return step_explicit_midpoint(sys, t, u, p, h, with_jacobian);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown scheme");
}

const char* to_string(FlowStatus::Kind k) {
  switch (k) {
    case FlowStatus::Kind::Completed: return "Completed";
    case FlowStatus::Kind::BlowUp: return "BlowUp";
    case FlowStatus::Kind::NewtonFailure: return "NewtonFailure";
  }
  return "Unknown";
}

std::string FlowStatus::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind != Kind::Completed) os << " at t=" << t;
  return os.str();
}

Trajectory FlowResult::trajectory() const {
  if (!completed()) throw Error(ErrorKind::FlowIncomplete, status.describe());
  return Trajectory(TimeGrid(times), positions, momenta);
}

namespace {

enum class Outcome { Ok, BlowUp, Fail };

struct Marcher {
  const HamiltonianSystem& sys;
  const IntegratorConfig& cfg;
  bool with_jacobian;
  double event_time = 0.0;

  Outcome advance(double t, double h, int depth, Vec& u, Vec& p, Mat& jac) {
    StepResult s;
    bool ok = true;
    try {
      s = step(sys, t, u, p, h, cfg, with_jacobian);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NotSeparable) throw;
      ok = false;
    }
    // A converged step that moves the state by more than max_step_change
    // (relative) is treated like a failed one: near a pole the implicit
    // equations have spurious roots on the far side of the singularity.
    if (ok && depth < cfg.max_halvings &&
        std::max((s.u - u).lpNorm<Eigen::Infinity>(), (s.p - p).lpNorm<Eigen::Infinity>()) >
            cfg.max_step_change * std::max(1.0, sup_norm(u, p)))
      ok = false;
    if (ok) {
      u = s.u;
      p = s.p;
      if (with_jacobian) jac = s.jacobian * jac;
      if (sup_norm(u, p) > cfg.blowup_threshold) {
        event_time = t + h;
        return Outcome::BlowUp;
      }
      return Outcome::Ok;
    }
    if (depth < cfg.max_halvings) {
      const Outcome first = advance(t, 0.5 * h, depth + 1, u, p, jac);
      if (first != Outcome::Ok) return first;
      return advance(t + 0.5 * h, 0.5 * h, depth + 1, u, p, jac);
    }
    event_time = t;
    return sup_norm(u, p) > cfg.blowup_threshold / 10.0 ? Outcome::BlowUp : Outcome::Fail;
  }
};

FlowResult sample_analytic(const HamiltonianSystem& sys, double t0, double t1, const Vec& u0,
                           const Vec& p0, int steps, bool with_jacobian) {
  FlowResult out;
  const double h = (t1 - t0) / steps;
  for (int k = 0; k <= steps; ++k) {
    const double t = k == steps ? t1 : t0 + k * h;
    auto [u, p] = (*sys.analytic_flow)(t - t0, u0, p0);
    out.times.push_back(t);
    out.positions.push_back(std::move(u));
    out.momenta.push_back(std::move(p));
  }
  if (with_jacobian) {
    if (!sys.analytic_flow_jacobian)
      throw Error(ErrorKind::InvalidArgument, sys.name + " has no analytic flow Jacobian");
    out.jacobian = (*sys.analytic_flow_jacobian)(t1 - t0, u0, p0);
  }
  out.status = {FlowStatus::Kind::Completed, t1};
  return out;
}

}  // namespace

FlowResult integrate_span(const HamiltonianSystem& sys, double t0, double t1, const Vec& u0,
                          const Vec& p0, const IntegratorConfig& cfg, bool with_jacobian) {
  cfg.validate();
  if (u0.size() != sys.dim() || p0.size() != sys.dim())
    throw Error(ErrorKind::DimensionMismatch, "initial data dimension does not match " + sys.name);
  if (!(t1 >= t0)) throw Error(ErrorKind::InvalidArgument, "integration span must satisfy t1 >= t0");

  const double span = t1 - t0;
  const int steps = span == 0.0 ? 0 : std::max(1, static_cast<int>(std::ceil(span / cfg.step - 1e-9)));

  if (sys.use_analytic_flow && sys.analytic_flow)
    return sample_analytic(sys, t0, t1, u0, p0, std::max(steps, 1), with_jacobian);

  FlowResult out;
  const auto r = u0.size();
  Vec u = u0, p = p0;
  Mat jac = with_jacobian ? Mat(Mat::Identity(2 * r, 2 * r)) : Mat();
  out.times.push_back(t0);
  out.positions.push_back(u);
  out.momenta.push_back(p);

  Marcher marcher{sys, cfg, with_jacobian};
  const double h = steps > 0 ? span / steps : 0.0;
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const double t_next = k + 1 == steps ? t1 : t0 + (k + 1) * h;
    const Outcome o = marcher.advance(t, t_next - t, 0, u, p, jac);
    if (o == Outcome::Ok) {
      out.times.push_back(t_next);
      out.positions.push_back(u);
      out.momenta.push_back(p);
      continue;
    }
    if (o == Outcome::BlowUp) {
      if (marcher.event_time > out.times.back()) {
        out.times.push_back(marcher.event_time);
        out.positions.push_back(u);
        out.momenta.push_back(p);
      }
      out.status = {FlowStatus::Kind::BlowUp, marcher.event_time};
    } else {
      out.status = {FlowStatus::Kind::NewtonFailure, marcher.event_time};
    }
    return out;
  }
  out.status = {FlowStatus::Kind::Completed, t1};
  if (with_jacobian) out.jacobian = jac;
  return out;
}

FlowResult integrate_flow(const HamiltonianSystem& sys, const Vec& u0, const Vec& p0,
                          const IntegratorConfig& cfg) {
  return integrate_span(sys, 0.0, 1.0, u0, p0, cfg, false);
}

Mat flow_jacobian(const HamiltonianSystem& sys, const Vec& u0, const Vec& p0,
                  const IntegratorConfig& cfg, double t_end) {
  const auto res = integrate_span(sys, 0.0, t_end, u0, p0, cfg, true);
  if (!res.completed()) throw Error(ErrorKind::FlowIncomplete, res.status.describe());
  return res.jacobian;
}

Mat canonical_skew(int r) {
  Mat s = Mat::Zero(2 * r, 2 * r);
  s.topRightCorner(r, r) = Mat::Identity(r, r);
  s.bottomLeftCorner(r, r) = -Mat::Identity(r, r);
  return s;
}

double symplecticity_defect(const Mat& jacobian) {
  if (jacobian.rows() != jacobian.cols() || jacobian.rows() % 2 != 0 || jacobian.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch, "symplecticity defect needs a square even-dimensional matrix");
  const Mat s = canonical_skew(static_cast<int>(jacobian.rows() / 2));
  return (jacobian.transpose() * s * jacobian - s).lpNorm<Eigen::Infinity>();
}

}  // namespace hamfield
