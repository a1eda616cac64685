#include "hamfield/constraints.hpp"

#include <algorithm>
#include <cmath>

namespace hamfield {

namespace {

constexpr double kOnConstraintTol = 1e-8;

Vec min_norm_solve(const Mat& a, const Vec& b) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  return svd.solve(b);
}

// Least-squares D with dSigma D = -dH/du and the relative residual.
std::pair<Vec, double> solve_tangency(const Mat& ds, const Vec& hu, Vec* violation = nullptr) {
  const Vec d = min_norm_solve(ds, -hu);
  const Vec miss = ds * d + hu;
  if (violation) *violation = miss;
  return {d, miss.norm() / std::max(1.0, hu.norm())};
}

void require_on_constraint(const ConstraintSpec& spec, const ExtendedState& s) {
  const double off = (s.p - spec.sigma(s.e)).lpNorm<Eigen::Infinity>();
  if (!(off <= kOnConstraintTol))
    throw Error(ErrorKind::OffConstraint, "|p - Sigma(e)| = " + std::to_string(off));
}

}  // namespace

ConstraintSpec identity_constraint(int r) {
  if (r < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  ConstraintSpec s;
  s.name = "identity";
  s.r_dim = r;
  s.k_dim = r;
  s.sigma = [](const Vec& e) { return e; };
  s.dsigma = [r](const Vec&) { return Mat(Mat::Identity(r, r)); };
  return s;
}

ConstraintSpec circle_constraint() {
  ConstraintSpec s;
  s.name = "circle";
  s.r_dim = 2;
  s.k_dim = 1;
  s.sigma = [](const Vec& e) {
    Vec v(2);
    v << std::cos(e[0]), std::sin(e[0]);
    return v;
  };
  s.dsigma = [](const Vec& e) {
    Mat m(2, 1);
    m << -std::sin(e[0]), std::cos(e[0]);
    return m;
  };
  return s;
}

ConstraintSpec make_constraint(const std::string& name, int r) {
  if (name == "identity") return identity_constraint(r);
  if (name == "circle") {
    if (r != 2) throw Error(ErrorKind::DimensionMismatch, "circle constraint lives on R^2");
    return circle_constraint();
  }
  throw Error(ErrorKind::InvalidArgument, "unknown constraint '" + name + "'");
}

std::vector<std::string> constraint_names() { return {"identity", "circle"}; }

double dsigma_consistency(const ConstraintSpec& spec, const Vec& e, double step) {
  const Mat ds = spec.dsigma(e);
  double worst = 0.0;
  for (int i = 0; i < spec.k_dim; ++i) {
    Vec a = e, b = e;
    a[i] += step;
    b[i] -= step;
    const Vec fd = (spec.sigma(a) - spec.sigma(b)) / (2 * step);
    worst = std::max(worst, (fd - ds.col(i)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

HamiltonianSystem make_planar_system(double kinetic, double slope) {
  HamiltonianSystem s;
  s.name = "planar";
  s.config = ConfigSpace(2);
  s.hamiltonian = [kinetic, slope](double, const Vec& u, const Vec& p) {
    return 0.5 * kinetic * p.squaredNorm() + slope * u[0];
  };
  s.grad_u = [slope](double, const Vec&, const Vec&) {
    Vec g = Vec::Zero(2);
    g[0] = slope;
    return g;
  };
  s.grad_p = [kinetic](double, const Vec&, const Vec& p) { return Vec(kinetic * p); };
  s.hessian = [kinetic](double, const Vec&, const Vec&) {
    Mat h = Mat::Zero(4, 4);
    h.bottomRightCorner(2, 2) = kinetic * Mat::Identity(2, 2);
    return h;
  };
  s.separable = true;
  return s;
}

double extended_action(const HamiltonianSystem& sys, const ConstraintSpec& spec, const Trajectory& chi,
                       const std::vector<Vec>& lambda_path, const std::vector<Vec>& e_path) {
  if (lambda_path.size() != chi.size() || e_path.size() != chi.size())
    throw Error(ErrorKind::GridMismatch, "multiplier and K paths must live on the trajectory grid");
  const auto w = chi.grid.quadrature_weights();
  double s = action_functional(sys, chi);
  for (std::size_t k = 0; k < chi.size(); ++k)
    s += w[k] * lambda_path[k].dot(chi.momenta[k] - spec.sigma(e_path[k]));
  return s;
}

PhaseVelocity constrained_vector_field(const HamiltonianSystem& sys, const ConstraintSpec&,
                                       const ExtendedState& state) {
  auto v = hamiltonian_vector_field(sys, 0.0, state.u, state.p);
  v.du -= state.lambda;
  if (!v.du.allFinite()) throw Error(ErrorKind::NonFinite, "constrained vector field");
  return v;
}

Vec polar_constraint_residual(const ConstraintSpec& spec, const Vec& e, const Vec& lambda) {
  return spec.dsigma(e).transpose() * lambda;
}

double extended_hamiltonian(const HamiltonianSystem& sys, const ConstraintSpec& spec,
                            const ExtendedState& s) {
  return sys.hamiltonian(0.0, s.u, s.p) - s.lambda.dot(s.p - spec.sigma(s.e));
}

Mat presymplectic_form(int r, int k) {
  const int n = 3 * r + k;
  Mat w = Mat::Zero(n, n);
  w.block(0, r, r, r) = Mat::Identity(r, r);
  w.block(r, 0, r, r) = -Mat::Identity(r, r);
  return w;
}

const char* to_string(GotayReport::Stability s) {
  return s == GotayReport::Stability::Stable ? "Stable" : "SecondaryConstraint";
}

Mat polar_basis(const ConstraintSpec& spec, const Vec& e) {
  const Mat dst = spec.dsigma(e).transpose();  // k x r
  Eigen::JacobiSVD<Mat> svd(dst, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > spec.rank_tol * std::max(1.0, smax)) ++rank;
  return svd.matrixV().rightCols(spec.r_dim - rank);
}

GotayReport gotay_step(const HamiltonianSystem& sys, const ConstraintSpec& spec, const ExtendedState& state) {
  const int r = spec.r_dim, k = spec.k_dim, n = 3 * r + k;
  GotayReport rep;
  rep.omega0 = presymplectic_form(r, k);

  Eigen::JacobiSVD<Mat> svd(rep.omega0, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > spec.rank_tol) ++rank;
  rep.kernel_basis = svd.matrixV().rightCols(n - rank);
  rep.kernel_residual = (rep.omega0 * rep.kernel_basis).cwiseAbs().maxCoeff();

  // dH0 in (u, p, Lambda, e) coordinates.
  const Vec hu = sys.grad_u(0.0, state.u, state.p);
  const Vec hp = sys.grad_p(0.0, state.u, state.p);
  const Mat ds = spec.dsigma(state.e);
  Vec dh0(n);
  dh0 << hu, hp - state.lambda, -(state.p - spec.sigma(state.e)), ds.transpose() * state.lambda;

  // i_Z dH0 along the kernel images of the Lambda and e coordinate directions.
  const Mat proj = rep.kernel_basis * rep.kernel_basis.transpose();
  rep.phi.resize(r);
  rep.psi.resize(k);
  for (int a = 0; a < r; ++a) rep.phi[a] = -dh0.dot(proj.col(2 * r + a));
  for (int i = 0; i < k; ++i) rep.psi[i] = dh0.dot(proj.col(3 * r + i));

  // Tangency of phi = p - Sigma(e): -dH/du - dSigma D = 0.
  auto [d, rel] = solve_tangency(ds, hu, &rep.violating_direction);
  rep.tangency_residual = rel;
  if (rel > spec.rank_tol) {
    rep.stability = GotayReport::Stability::SecondaryConstraint;
    rep.D = d;
    return rep;
  }
  rep.D = d;
  rep.violating_direction = Vec::Zero(r);

  // Preservation of psi: dSigma^T C + M D = 0, M = Lambda^a d^2 Sigma_a / de^2.
  Mat m = Mat::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(state.e[j]));
    Vec a = state.e, b = state.e;
    a[j] += h;
    b[j] -= h;
    m.col(j) = ((spec.dsigma(a) - spec.dsigma(b)).transpose() * state.lambda) / (2 * h);
  }
  m = 0.5 * (m + m.transpose()).eval();
  const Vec rhs = -m * d;
  rep.C = min_norm_solve(ds.transpose(), rhs);
  rep.c_residual = (ds.transpose() * rep.C - rhs).norm();
  rep.terminated = true;
  return rep;
}

double stability_check(const HamiltonianSystem& sys, const ConstraintSpec& spec, const ExtendedState& state) {
  require_on_constraint(spec, state);
  const Mat basis = polar_basis(spec, state.e);
  if (basis.cols() == 0) return 0.0;
  const Vec hu = sys.grad_u(0.0, state.u, state.p);
  return (basis.transpose() * hu).lpNorm<Eigen::Infinity>();
}

namespace {

struct ConstrainedRhs {
  const HamiltonianSystem& sys;
  const ConstraintSpec& spec;
  const std::optional<LambdaPath>& gauge;
  double tol;

  int r() const { return spec.r_dim; }

  // Returns nullopt when the tangency condition fails at (t, z).
  std::optional<Vec> operator()(double t, const Vec& z) const {
    const Vec u = z.head(r());
    const Vec e = z.tail(spec.k_dim);
    const Vec p = spec.sigma(e);
    const Vec hu = sys.grad_u(t, u, p);
    auto [d, rel] = solve_tangency(spec.dsigma(e), hu);
    if (rel > tol) return std::nullopt;
    Vec du = sys.grad_p(t, u, p);
    if (gauge) du -= (*gauge)(t);
    Vec f(z.size());
    f << du, d;
    if (!f.allFinite()) throw Error(ErrorKind::NonFinite, "constrained right-hand side");
    return f;
  }
};

}  // namespace

ConstrainedFlowResult integrate_constrained(const HamiltonianSystem& sys, const ConstraintSpec& spec,
                                            const Vec& u0, const Vec& e0, const IntegratorConfig& cfg,
                                            const std::optional<LambdaPath>& gauge) {
  cfg.validate();
  if (u0.size() != spec.r_dim || e0.size() != spec.k_dim || sys.dim() != spec.r_dim)
    throw Error(ErrorKind::DimensionMismatch, "constrained initial data");
  const int r = spec.r_dim, k = spec.k_dim, n = r + k;
  ConstrainedFlowResult out;
  if (gauge) out.gauge = "custom";
  const ConstrainedRhs rhs{sys, spec, gauge, spec.rank_tol};

  Vec z(n);
  z << u0, e0;
  const auto record = [&](double t, const Vec& zz) {
    const Vec e = zz.tail(k);
    const Vec p = spec.sigma(e);
    out.flow.times.push_back(t);
    out.flow.positions.push_back(zz.head(r));
    out.flow.momenta.push_back(p);
    out.e.push_back(e);
    if (gauge) out.polar_residual = std::max(out.polar_residual,
                                             polar_constraint_residual(spec, e, (*gauge)(t)).lpNorm<Eigen::Infinity>());
  };
  record(0.0, z);
  const double h0 = sys.hamiltonian(0.0, u0, spec.sigma(e0));

  if (!rhs(0.0, z)) {
    out.unstable_at = 0.0;
    out.flow.status = {FlowStatus::Kind::NewtonFailure, 0.0};
    return out;
  }

  const int steps = static_cast<int>(std::ceil(1.0 / cfg.step - 1e-9));
  const double h = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    const double t = s * h, tm = t + 0.5 * h;
    Vec z1 = z + h * *rhs(t, z);
    bool converged = false;
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
      const Vec mid = 0.5 * (z + z1);
      const auto f = rhs(tm, mid);
      if (!f) {
        out.unstable_at = tm;
        break;
      }
      const Vec g = z1 - z - h * *f;
      if (g.lpNorm<Eigen::Infinity>() <= cfg.newton_tol * std::max(1.0, z1.lpNorm<Eigen::Infinity>())) {
        converged = true;
        break;
      }
      Mat jf(n, n);
      for (int j = 0; j < n; ++j) {
        const double eps = 1e-7 * std::max(1.0, std::abs(mid[j]));
        Vec a = mid, b = mid;
        a[j] += eps;
        b[j] -= eps;
        const auto fa = rhs(tm, a), fb = rhs(tm, b);
        if (!fa || !fb) {
          out.unstable_at = tm;
          break;
        }
        jf.col(j) = (*fa - *fb) / (2 * eps);
      }
      if (out.unstable_at) break;
      const Mat jg = Mat::Identity(n, n) - 0.5 * h * jf;
      z1 -= jg.partialPivLu().solve(g);
    }
    if (out.unstable_at) {
      out.flow.status = {FlowStatus::Kind::NewtonFailure, *out.unstable_at};
      return out;
    }
    if (!converged) {
      out.flow.status = {FlowStatus::Kind::NewtonFailure, t};
      return out;
    }
    z = z1;
    record(t + h, z);
    if (s + 1 == steps) out.flow.times.back() = 1.0;
    const Vec& u = out.flow.positions.back();
    const Vec& p = out.flow.momenta.back();
    out.energy_drift = std::max(out.energy_drift, std::abs(sys.hamiltonian(t + h, u, p) - h0));
    out.constraint_drift =
        std::max(out.constraint_drift, (p - spec.sigma(out.e.back())).lpNorm<Eigen::Infinity>());
  }
  out.flow.status = {FlowStatus::Kind::Completed, 1.0};
  return out;
}

double check_hamiltonian_descends(const HamiltonianSystem& sys, const ConstraintSpec& spec,
                                  const std::vector<ExtendedState>& probes, double step) {
  double worst = 0.0;
  for (const auto& s : probes) {
    require_on_constraint(spec, s);
    const Mat basis = polar_basis(spec, s.e);
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
      const Vec dir = basis.col(c);
      const double d = (sys.hamiltonian(0.0, s.u + step * dir, s.p) - sys.hamiltonian(0.0, s.u - step * dir, s.p)) /
                       (2 * step);
      worst = std::max(worst, std::abs(d));
    }
  }
  return worst;
}

}  // namespace hamfield
