#include "hamfield/system.hpp"

#include <algorithm>
#include <cmath>

namespace hamfield {

ConfigSpace::ConfigSpace(int dim, CoordinateKind kind) {
  if (dim < 1) throw Error(ErrorKind::InvalidArgument, "configuration dimension must be >= 1");
  kinds.assign(static_cast<std::size_t>(dim), kind);
}

ConfigSpace::ConfigSpace(std::vector<CoordinateKind> k) : kinds(std::move(k)) {
  if (kinds.empty()) throw Error(ErrorKind::InvalidArgument, "configuration dimension must be >= 1");
}

Vec ConfigSpace::difference(const Vec& a, const Vec& b) const {
  Vec d = a - b;
  for (int i = 0; i < dim(); ++i)
    if (is_angular(i)) d[i] = wrap_angle(d[i]);
  return d;
}

double ConfigSpace::distance(const Vec& a, const Vec& b) const {
  return difference(a, b).lpNorm<Eigen::Infinity>();
}

PhaseVelocity hamiltonian_vector_field(const HamiltonianSystem& sys, double t, const Vec& u,
                                       const Vec& p) {
  PhaseVelocity v{sys.grad_p(t, u, p), -sys.grad_u(t, u, p)};
  if (!all_finite(v.du) || !all_finite(v.dp))
    throw Error(ErrorKind::NonFinite, "Hamiltonian vector field of " + sys.name);
  return v;
}

Mat hamiltonian_hessian(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p) {
  if (sys.hessian) return sys.hessian(t, u, p);
  const int r = sys.dim();
  Mat h(2 * r, 2 * r);
  for (int j = 0; j < 2 * r; ++j) {
    Vec up = u, um = u, pp = p, pm = p;
    const double x = j < r ? u[j] : p[j - r];
    const double step = 1e-5 * std::max(1.0, std::abs(x));
    if (j < r) {
      up[j] += step;
      um[j] -= step;
    } else {
      pp[j - r] += step;
      pm[j - r] -= step;
    }
    h.block(0, j, r, 1) = (sys.grad_u(t, up, pp) - sys.grad_u(t, um, pm)) / (2 * step);
    h.block(r, j, r, 1) = (sys.grad_p(t, up, pp) - sys.grad_p(t, um, pm)) / (2 * step);
  }
  return 0.5 * (h + h.transpose());
}

Mat vector_field_jacobian(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p) {
  const int r = sys.dim();
  const Mat h = hamiltonian_hessian(sys, t, u, p);
  // X_H = (H_p, -H_u); rows of J * Hess with J the canonical skew matrix.
  Mat a(2 * r, 2 * r);
  a.topRows(r) = h.bottomRows(r);
  a.bottomRows(r) = -h.topRows(r);
  if (!a.allFinite()) throw Error(ErrorKind::NonFinite, "vector field Jacobian of " + sys.name);
  return a;
}

double gradient_consistency(const HamiltonianSystem& sys, double t, const Vec& u, const Vec& p,
                            double step) {
  const int r = sys.dim();
  const Vec gu = sys.grad_u(t, u, p);
  const Vec gp = sys.grad_p(t, u, p);
  double worst = 0.0;
  for (int j = 0; j < 2 * r; ++j) {
    Vec up = u, um = u, pp = p, pm = p;
    if (j < r) {
      up[j] += step;
      um[j] -= step;
    } else {
      pp[j - r] += step;
      pm[j - r] -= step;
    }
    const double fd = (sys.hamiltonian(t, up, pp) - sys.hamiltonian(t, um, pm)) / (2 * step);
    const double exact = j < r ? gu[j] : gp[j - r];
    worst = std::max(worst, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
  }
  return worst;
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw Error(ErrorKind::GridTooCoarse, "a time grid needs at least two nodes");
  if (nodes_.front() != 0.0 || nodes_.back() != 1.0)
    throw Error(ErrorKind::InvalidArgument, "time grid must start at 0 and end at 1");
  for (std::size_t k = 1; k < nodes_.size(); ++k)
    if (!(nodes_[k] > nodes_[k - 1]))
      throw Error(ErrorKind::InvalidArgument, "time grid must be strictly increasing");
}

TimeGrid TimeGrid::uniform(int intervals) {
  if (intervals < 1) throw Error(ErrorKind::GridTooCoarse, "need at least one interval");
  std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) t[k] = static_cast<double>(k) / intervals;
  t.back() = 1.0;
  return TimeGrid(std::move(t));
}

std::vector<double> TimeGrid::quadrature_weights() const {
  std::vector<double> w(nodes_.size(), 0.0);
  for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
    const double h = nodes_[k + 1] - nodes_[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

Trajectory::Trajectory(TimeGrid g, std::vector<Vec> u, std::vector<Vec> p)
    : grid(std::move(g)), positions(std::move(u)), momenta(std::move(p)) {
  if (positions.size() != grid.size() || momenta.size() != grid.size())
    throw Error(ErrorKind::GridMismatch, "trajectory arrays must match the grid length");
  const auto r = positions.front().size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (positions[k].size() != r || momenta[k].size() != r)
      throw Error(ErrorKind::DimensionMismatch, "inconsistent trajectory dimensions");
    if (!all_finite(positions[k]) || !all_finite(momenta[k]))
      throw Error(ErrorKind::NonFinite, "trajectory entries must be finite");
  }
}

Trajectory Trajectory::sample(const TimeGrid& grid, const std::function<Vec(double)>& u,
                              const std::function<Vec(double)>& p) {
  std::vector<Vec> us, ps;
  us.reserve(grid.size());
  ps.reserve(grid.size());
  for (double t : grid.nodes()) {
    us.push_back(u(t));
    ps.push_back(p(t));
  }
  return Trajectory(grid, std::move(us), std::move(ps));
}

std::vector<Vec> discrete_derivative(const TimeGrid& grid, const std::vector<Vec>& f) {
  const int n = grid.intervals();
  if (n < 2) throw Error(ErrorKind::GridTooCoarse, "discrete derivative needs N >= 2 intervals");
  const auto& t = grid.nodes();
  std::vector<Vec> d(f.size());
  {
    const double h1 = t[1] - t[0], h2 = t[2] - t[1];
    d[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
           h1 / (h2 * (h1 + h2)) * f[2];
  }
  for (int i = 1; i < n; ++i) {
    const double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
    d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] +
           h1 / (h2 * (h1 + h2)) * f[i + 1];
  }
  {
    const double h1 = t[n - 1] - t[n - 2], h2 = t[n] - t[n - 1];
    d[n] = h2 / (h1 * (h1 + h2)) * f[n - 2] - (h1 + h2) / (h1 * h2) * f[n - 1] +
           (h1 + 2 * h2) / (h2 * (h1 + h2)) * f[n];
  }
  return d;
}

double action_functional(const HamiltonianSystem& sys, const Trajectory& chi) {
  const auto udot = discrete_derivative(chi.grid, chi.positions);
  const auto w = chi.grid.quadrature_weights();
  double s = 0.0;
  for (std::size_t k = 0; k < chi.size(); ++k) {
    const double integrand =
        chi.momenta[k].dot(udot[k]) - sys.hamiltonian(chi.grid[k], chi.positions[k], chi.momenta[k]);
    s += w[k] * integrand;
  }
  if (!std::isfinite(s)) throw Error(ErrorKind::NonFinite, "action functional");
  return s;
}

ElResidual el_residual(const HamiltonianSystem& sys, const Trajectory& chi) {
  const auto udot = discrete_derivative(chi.grid, chi.positions);
  const auto pdot = discrete_derivative(chi.grid, chi.momenta);
  ElResidual out;
  out.res_u.reserve(chi.size());
  out.res_p.reserve(chi.size());
  for (std::size_t k = 0; k < chi.size(); ++k) {
    const auto v = hamiltonian_vector_field(sys, chi.grid[k], chi.positions[k], chi.momenta[k]);
    out.res_u.push_back(udot[k] - v.du);
    out.res_p.push_back(pdot[k] - v.dp);
    out.norm = std::max({out.norm, out.res_u.back().lpNorm<Eigen::Infinity>(),
                         out.res_p.back().lpNorm<Eigen::Infinity>()});
  }
  return out;
}

double el_pairing(const HamiltonianSystem& sys, const Trajectory& chi, const std::vector<Vec>& du,
                  const std::vector<Vec>& dp) {
  if (du.size() != chi.size() || dp.size() != chi.size())
    throw Error(ErrorKind::GridMismatch, "variation must live on the trajectory grid");
  const auto res = el_residual(sys, chi);
  const auto w = chi.grid.quadrature_weights();
  double s = 0.0;
  for (std::size_t k = 0; k < chi.size(); ++k)
    s += w[k] * (res.res_u[k].dot(dp[k]) - res.res_p[k].dot(du[k]));
  return s;
}

FundamentalFormula fundamental_formula(const HamiltonianSystem& sys, const Trajectory& chi,
                                       const std::vector<Vec>& du, const std::vector<Vec>& dp, double h_fd) {
  if (du.size() != chi.size() || dp.size() != chi.size())
    throw Error(ErrorKind::GridMismatch, "variation must live on the trajectory grid");
  const auto shifted = [&](double eps) {
    std::vector<Vec> u = chi.positions, p = chi.momenta;
    for (std::size_t k = 0; k < chi.size(); ++k) {
      u[k] += eps * du[k];
      p[k] += eps * dp[k];
    }
    return action_functional(sys, Trajectory(chi.grid, std::move(u), std::move(p)));
  };
  FundamentalFormula f;
  f.ds = (shifted(h_fd) - shifted(-h_fd)) / (2 * h_fd);
  f.el_pairing = el_pairing(sys, chi, du, dp);
  f.boundary = alpha_eval(boundary_projection(chi), {du.front(), dp.front(), du.back(), dp.back()});
  f.defect = std::abs(f.ds - f.el_pairing - f.boundary);
  return f;
}

Vec BoundaryTangent::stacked() const {
  const auto r = du0.size();
  Vec v(4 * r);
  v << du0, dp0, du1, dp1;
  return v;
}

BoundaryTangent BoundaryTangent::from_stacked(const Vec& v) {
  if (v.size() % 4 != 0) throw Error(ErrorKind::DimensionMismatch, "boundary tangent must have 4r entries");
  const auto r = v.size() / 4;
  return {v.segment(0, r), v.segment(r, r), v.segment(2 * r, r), v.segment(3 * r, r)};
}

BoundaryPoint boundary_projection(const Trajectory& chi) {
  return {chi.positions.front(), chi.momenta.front(), chi.positions.back(), chi.momenta.back()};
}

double alpha_eval(const BoundaryPoint& bp, const BoundaryTangent& v) {
  if (bp.p0.size() != v.du0.size() || bp.p1.size() != v.du1.size())
    throw Error(ErrorKind::DimensionMismatch, "alpha_eval");
  return bp.p1.dot(v.du1) - bp.p0.dot(v.du0);
}

double omega_eval(const BoundaryTangent& v, const BoundaryTangent& w) {
  if (v.du0.size() != w.du0.size()) throw Error(ErrorKind::DimensionMismatch, "omega_eval");
  return (v.du1.dot(w.dp1) - v.dp1.dot(w.du1)) - (v.du0.dot(w.dp0) - v.dp0.dot(w.du0));
}

}  // namespace hamfield
