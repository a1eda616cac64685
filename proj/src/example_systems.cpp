#include "hamfield/example_systems.hpp"

#include "hamfield/constraints.hpp"
#include "hamfield/lagrangian.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hamfield {

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

void require_positive(double x, ErrorKind kind, const char* what) {
  if (!(x > 0.0)) throw Error(kind, std::string(what) + " must be positive");
}

IntegratorConfig fine_midpoint(double h = 1e-3) {
  IntegratorConfig c;
  c.step = h;
  return c;
}

}  // namespace

VectorField constant_field(const Vec& c) {
  VectorField x;
  x.name = "constant";
  x.dim = static_cast<int>(c.size());
  x.value = [c](const Vec&) { return c; };
  const auto n = c.size();
  x.jacobian = [n](const Vec&) { return Mat(Mat::Zero(n, n)); };
  x.flow = [c](double t, const Vec& u) { return Vec(u + t * c); };
  x.flow_derivative = [n](double, const Vec&) { return Mat(Mat::Identity(n, n)); };
  x.constant = c;
  return x;
}

VectorField linear_field(int dim, double rate) {
  VectorField x;
  x.name = "linear";
  x.dim = dim;
  x.value = [rate](const Vec& u) { return Vec(rate * u); };
  x.jacobian = [rate, dim](const Vec&) { return Mat(rate * Mat::Identity(dim, dim)); };
  x.flow = [rate](double t, const Vec& u) { return Vec(std::exp(rate * t) * u); };
  x.flow_derivative = [rate, dim](double t, const Vec&) {
    return Mat(std::exp(rate * t) * Mat::Identity(dim, dim));
  };
  return x;
}

ExampleSystem make_free_particle(double m) {
  require_positive(m, ErrorKind::NonPositiveMass, "mass");
  HamiltonianSystem s;
  s.name = "free-particle";
  s.config = ConfigSpace(1);
  s.hamiltonian = [m](double, const Vec&, const Vec& p) { return p.squaredNorm() / (2 * m); };
  s.grad_u = [](double, const Vec& u, const Vec&) { return Vec(Vec::Zero(u.size())); };
  s.grad_p = [m](double, const Vec&, const Vec& p) { return Vec(p / m); };
  s.hessian = [m](double, const Vec& u, const Vec&) {
    const auto r = u.size();
    Mat h = Mat::Zero(2 * r, 2 * r);
    h.bottomRightCorner(r, r) = Mat::Identity(r, r) / m;
    return h;
  };
  s.separable = true;
  s.analytic_flow = [m](double t, const Vec& u0, const Vec& p0) {
    return std::pair<Vec, Vec>(u0 + p0 * t / m, p0);
  };
  s.analytic_flow_jacobian = [m](double t, const Vec& u0, const Vec&) {
    const auto r = u0.size();
    Mat j = Mat::Identity(2 * r, 2 * r);
    j.topRightCorner(r, r) = Mat::Identity(r, r) * t / m;
    return j;
  };

  ExampleSystem ex{s, {}};
  ex.facts.push_back({"flow", "phi_1(0, 1) = (1/m, 1)", 1e-12, [s, m] {
                        const auto f = integrate_flow(s, v1(0), v1(1), fine_midpoint());
                        return std::max(std::abs(f.positions.back()[0] - 1.0 / m),
                                        std::abs(f.momenta.back()[0] - 1.0));
                      }});
  ex.facts.push_back({"dirichlet-plane", "BVP (0,2): p1 = p0 = m (u1 - u0)", 1e-8, [s, m] {
                        const auto set = solve_dirichlet(s, v1(0), v1(2), ShootingConfig{});
                        if (set.classification != BvpClass::Unique) return 1.0;
                        const auto& tr = set.solutions.front().trajectory;
                        return std::max(std::abs(tr.momenta.front()[0] - 2 * m),
                                        std::abs(tr.momenta.back()[0] - 2 * m));
                      }});
  ex.facts.push_back({"principal-function", "W(0, 2) = m (u1 - u0)^2 / 2", 1e-6, [s, m] {
                        return std::abs(hamilton_principal_function(s, v1(0), v1(2), ShootingConfig{}, 0) -
                                        2 * m);
                      }});
  ex.facts.push_back({"symplectic-flow", "D phi_1 is symplectic", 1e-12, [s] {
                        return symplecticity_defect(flow_jacobian(s, v1(0.3), v1(-0.7), fine_midpoint()));
                      }});
  return ex;
}

double QuarticZeroEnergy::p0() const { return sign * m * u0 * u0 / std::numbers::sqrt2; }

double QuarticZeroEnergy::u(double t) const {
  return std::numbers::sqrt2 * u0 / (std::numbers::sqrt2 - sign * u0 * t);
}

double QuarticZeroEnergy::p(double t) const {
  const double x = u(t);
  return sign * m * x * x / std::numbers::sqrt2;
}

double QuarticZeroEnergy::escape_time() const {
  const double rate = sign * u0;
  return rate > 0 ? std::numbers::sqrt2 / rate : std::numeric_limits<double>::infinity();
}

ExampleSystem make_quartic(double m) {
  require_positive(m, ErrorKind::NonPositiveMass, "mass");
  HamiltonianSystem s;
  s.name = "quartic";
  s.config = ConfigSpace(1);
  s.hamiltonian = [m](double, const Vec& u, const Vec& p) {
    return p.squaredNorm() / (2 * m) - m * std::pow(u[0], 4) / 4;
  };
  s.grad_u = [m](double, const Vec& u, const Vec&) { return v1(-m * std::pow(u[0], 3)); };
  s.grad_p = [m](double, const Vec&, const Vec& p) { return Vec(p / m); };
  s.hessian = [m](double, const Vec& u, const Vec&) {
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = -3 * m * u[0] * u[0];
    h(1, 1) = 1 / m;
    return h;
  };
  s.separable = true;

  ExampleSystem ex{s, {}};
  ex.facts.push_back({"zero-energy-growing", "u0 = 1 growing branch matches sqrt2 u0/(sqrt2 - u0 t)", 1e-6,
                      [s, m] {
                        const QuarticZeroEnergy z{m, 1.0, +1};
                        const auto f = integrate_flow(s, v1(z.u0), v1(z.p0()), fine_midpoint(2.5e-4));
                        double err = 0.0;
                        for (std::size_t k = 0; k < f.times.size(); ++k)
                          err = std::max(err, std::abs(f.positions[k][0] - z.u(f.times[k])));
                        return f.completed() ? err : 1.0;
                      }});
  ex.facts.push_back({"zero-energy-decaying", "u0 = 1 decaying branch: u(1) = sqrt2/(sqrt2 + 1)", 1e-6,
                      [s, m] {
                        const QuarticZeroEnergy z{m, 1.0, -1};
                        const auto f = integrate_flow(s, v1(z.u0), v1(z.p0()), fine_midpoint(5e-4));
                        return f.completed() ? std::abs(f.positions.back()[0] - z.u(1.0)) : 1.0;
                      }});
  ex.facts.push_back({"blow-up", "u0 = 4 growing branch escapes near sqrt2/4 (relative error)", 0.05,
                      [s, m] {
                        const QuarticZeroEnergy z{m, 4.0, +1};
                        const auto f = integrate_flow(s, v1(z.u0), v1(z.p0()), fine_midpoint());
                        if (f.status.kind != FlowStatus::Kind::BlowUp) return 1.0;
                        return std::abs(f.status.t - z.escape_time()) / z.escape_time();
                      }});
  return ex;
}

ExampleSystem make_pendulum(double m, double k) {
  require_positive(m, ErrorKind::NonPositiveMass, "mass");
  require_positive(k, ErrorKind::InvalidArgument, "stiffness k");
  HamiltonianSystem s;
  s.name = "pendulum";
  s.config = ConfigSpace(1, CoordinateKind::Angular);
  s.hamiltonian = [m, k](double, const Vec& u, const Vec& p) {
    return p.squaredNorm() / (2 * m) - k * std::cos(u[0]);
  };
  s.grad_u = [k](double, const Vec& u, const Vec&) { return v1(k * std::sin(u[0])); };
  s.grad_p = [m](double, const Vec&, const Vec& p) { return Vec(p / m); };
  s.hessian = [m, k](double, const Vec& u, const Vec&) {
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = k * std::cos(u[0]);
    h(1, 1) = 1 / m;
    return h;
  };
  s.separable = true;

  ExampleSystem ex{s, {}};
  ex.facts.push_back({"equilibrium", "(0, 0) is a fixed point", 1e-15, [s] {
                        const auto v = hamiltonian_vector_field(s, 0.0, v1(0), v1(0));
                        return std::max(std::abs(v.du[0]), std::abs(v.dp[0]));
                      }});
  ex.facts.push_back({"small-angle-frequency", "arg eig(D phi_1 at rest) = sqrt(k/m)", 1e-4, [s, m, k] {
                        const Mat j = flow_jacobian(s, v1(0), v1(0), fine_midpoint());
                        Eigen::EigenSolver<Mat> es(j);
                        return std::abs(std::abs(std::arg(es.eigenvalues()[0])) - std::sqrt(k / m));
                      }});
  ex.facts.push_back({"two-branches", "(0, pi/2): at least two branches with distinct W", 0.0, [s] {
                        const auto set = solve_dirichlet(s, v1(0), v1(std::numbers::pi / 2), ShootingConfig{});
                        if (set.solutions.size() < 2) return 1.0;
                        const double w0 = hamilton_principal_function(set, s, 0);
                        const double w1 = hamilton_principal_function(set, s, 1);
                        return std::abs(w0 - w1) >= 1e-3 ? 0.0 : 1.0;
                      }});
  return ex;
}

Mat sphere_tangent_basis(const Vec& u) {
  const Vec n = u.normalized();
  Eigen::Index axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  Vec a = Vec::Zero(3);
  a[axis] = 1.0;
  const Eigen::Vector3d e1 = (a - a.dot(n) * n).normalized();
  const Eigen::Vector3d e2 = Eigen::Vector3d(n).cross(e1);
  Mat b(3, 2);
  b.col(0) = e1;
  b.col(1) = e2;
  return b;
}

namespace {

// sin(st)/s and (t cos(st) - sin(st)/s)/s^2 with their small-s limits.
void sphere_coefficients(double s, double t, double& c, double& S, double& G) {
  const double x = s * t;
  c = std::cos(x);
  if (std::abs(x) < 1e-4) {
    S = t * (1 - x * x / 6 + x * x * x * x / 120);
    G = -t * t * t / 3 + s * s * std::pow(t, 5) / 30;
  } else {
    S = std::sin(x) / s;
    G = (t * c - S) / (s * s);
  }
}

}  // namespace

ExampleSystem make_sphere_geodesics() {
  HamiltonianSystem s;
  s.name = "sphere";
  s.config = ConfigSpace(3);
  s.hamiltonian = [](double, const Vec&, const Vec& p) { return 0.5 * p.squaredNorm(); };
  s.grad_u = [](double, const Vec& u, const Vec&) { return Vec(Vec::Zero(u.size())); };
  s.grad_p = [](double, const Vec&, const Vec& p) { return p; };
  s.hessian = [](double, const Vec&, const Vec&) {
    Mat h = Mat::Zero(6, 6);
    h.bottomRightCorner(3, 3) = Mat::Identity(3, 3);
    return h;
  };
  s.separable = true;
  s.use_analytic_flow = true;
  s.momentum_basis = [](const Vec& u) { return sphere_tangent_basis(u); };
  s.analytic_flow = [](double t, const Vec& u0, const Vec& p0) {
    double c, S, G;
    const double sp = p0.norm();
    sphere_coefficients(sp, t, c, S, G);
    return std::pair<Vec, Vec>(c * u0 + S * p0, -sp * sp * S * u0 + c * p0);
  };
  s.analytic_flow_jacobian = [](double t, const Vec& u0, const Vec& p0) {
    double c, S, G;
    const double sp = p0.norm();
    sphere_coefficients(sp, t, c, S, G);
    const Mat id = Mat::Identity(3, 3);
    Mat j(6, 6);
    j.topLeftCorner(3, 3) = c * id;
    j.topRightCorner(3, 3) = -t * S * u0 * p0.transpose() + S * id + G * p0 * p0.transpose();
    j.bottomLeftCorner(3, 3) = -sp * sp * S * id;
    j.bottomRightCorner(3, 3) = -(S + t * c) * u0 * p0.transpose() + c * id - t * S * p0 * p0.transpose();
    return j;
  };

  ExampleSystem ex{s, {}};
  ex.facts.push_back({"antipode", "|p0| = pi from the north pole reaches the south pole", 1e-14, [s] {
                        Vec u0(3), p0(3);
                        u0 << 0, 0, 1;
                        p0 << std::numbers::pi, 0, 0;
                        return ((*s.analytic_flow)(1.0, u0, p0).first + u0).lpNorm<Eigen::Infinity>();
                      }});
  ex.facts.push_back({"rest", "p0 = 0 keeps u constant", 0.0, [s] {
                        Vec u0(3);
                        u0 << 0.6, 0, 0.8;
                        return ((*s.analytic_flow)(0.7, u0, Vec::Zero(3)).first - u0).lpNorm<Eigen::Infinity>();
                      }});
  ex.facts.push_back({"antipodal-continuum", "antipodal endpoints are joined by a continuum", 0.0, [s] {
                        Vec u0(3);
                        u0 << 0, 0, 1;
                        const auto set = solve_dirichlet(s, u0, -u0, ShootingConfig{});
                        return set.classification == BvpClass::Continuum ? 0.0 : 1.0;
                      }});
  return ex;
}

namespace {

HamiltonianSystem lambda_system(const VectorField& x, double lambda, const std::string& name) {
  HamiltonianSystem s;
  s.name = name;
  s.config = ConfigSpace(x.dim);
  s.hamiltonian = [x, lambda](double, const Vec& u, const Vec& p) {
    return 0.5 * lambda * p.squaredNorm() + p.dot(x.value(u));
  };
  s.grad_u = [x](double, const Vec& u, const Vec& p) { return Vec(x.jacobian(u).transpose() * p); };
  s.grad_p = [x, lambda](double, const Vec& u, const Vec& p) { return Vec(lambda * p + x.value(u)); };
  s.hessian = [x, lambda](double, const Vec& u, const Vec& p) {
    const auto r = u.size();
    Mat h = Mat::Zero(2 * r, 2 * r);
    const Mat dx = x.jacobian(u);
    if (!x.constant) {
      for (Eigen::Index j = 0; j < r; ++j) {
        const double step = 1e-5 * std::max(1.0, std::abs(u[j]));
        Vec a = u, b = u;
        a[j] += step;
        b[j] -= step;
        h.block(0, j, r, 1) = (x.jacobian(a).transpose() * p - x.jacobian(b).transpose() * p) / (2 * step);
      }
      h.topLeftCorner(r, r) = 0.5 * (h.topLeftCorner(r, r) + h.topLeftCorner(r, r).transpose()).eval();
    }
    h.topRightCorner(r, r) = dx.transpose();
    h.bottomLeftCorner(r, r) = dx;
    h.bottomRightCorner(r, r) = lambda * Mat::Identity(r, r);
    return h;
  };
  if (x.flow && x.flow_derivative && lambda == 0.0) {
    const auto flow = *x.flow;
    const auto dflow = *x.flow_derivative;
    s.analytic_flow = [flow, dflow](double t, const Vec& u0, const Vec& p0) {
      return std::pair<Vec, Vec>(flow(t, u0), dflow(t, u0).transpose().partialPivLu().solve(p0));
    };
  } else if (x.constant) {
    const Vec c = *x.constant;
    s.analytic_flow = [c, lambda](double t, const Vec& u0, const Vec& p0) {
      return std::pair<Vec, Vec>(u0 + (lambda * p0 + c) * t, p0);
    };
  }
  return s;
}

}  // namespace

ExampleSystem make_cotangent_lift(const VectorField& x) {
  HamiltonianSystem s = lambda_system(x, 0.0, "cotangent-lift");
  ExampleSystem ex{s, {}};
  if (s.analytic_flow) {
    ex.facts.push_back({"lifted-flow", "numerical phi_1 equals the cotangent lift of phi_1^X", 1e-8, [s, x] {
                          Vec u0 = Vec::Constant(x.dim, 1.0), p0 = Vec::Constant(x.dim, 1.0);
                          // h = 1e-4: the midpoint error for X = u is about h^2 e / 12.
                          const auto f = integrate_flow(s, u0, p0, fine_midpoint(1e-4));
                          const auto [u1, p1] = (*s.analytic_flow)(1.0, u0, p0);
                          return std::max((f.positions.back() - u1).lpNorm<Eigen::Infinity>(),
                                          (f.momenta.back() - p1).lpNorm<Eigen::Infinity>());
                        }});
  }
  if (x.flow) {
    ex.facts.push_back({"off-graph", "endpoints off graph(phi_1^X) admit no solution", 0.0, [s, x] {
                          const Vec u0 = Vec::Zero(x.dim);
                          const Vec u1 = (*x.flow)(1.0, u0) + Vec::Constant(x.dim, 0.5);
                          const auto set = solve_dirichlet(s, u0, u1, ShootingConfig{});
                          return set.classification == BvpClass::NoSolution ? 0.0 : 1.0;
                        }});
  }
  return ex;
}

ExampleSystem make_lambda_family(const VectorField& x, double lambda) {
  if (lambda < 0.0) throw Error(ErrorKind::NegativeLambda, "lambda must be >= 0");
  HamiltonianSystem s = lambda_system(x, lambda, "lambda-family");
  ExampleSystem ex{s, {}};
  if (x.constant && lambda > 0.0) {
    const Vec c = *x.constant;
    ex.facts.push_back({"dirichlet-momentum", "p0 = (u1 - u0 - c) / lambda", 1e-8, [s, c, lambda] {
                          const Vec u0 = Vec::Zero(c.size());
                          const Vec u1 = Vec::Constant(c.size(), 2.0);
                          const auto set = solve_dirichlet(s, u0, u1, ShootingConfig{});
                          if (set.classification != BvpClass::Unique) return 1.0;
                          return (set.solutions.front().p0 - (u1 - u0 - c) / lambda).lpNorm<Eigen::Infinity>();
                        }});
  }
  ex.facts.push_back({"cotangent-limit", "H_lambda - lambda |p|^2/2 equals the cotangent-lift Hamiltonian",
                      1e-12, [s, x, lambda] {
                        const auto lift = make_cotangent_lift(x).system;
                        double worst = 0.0;
                        for (const auto& [u, p] : random_phase_points(x.dim, 5, 2.0, 7)) {
                          worst = std::max(worst, std::abs(s.hamiltonian(0, u, p) - 0.5 * lambda * p.squaredNorm() -
                                                           lift.hamiltonian(0, u, p)));
                        }
                        return worst;
                      }});
  return ex;
}

double lambda_second_order_residual(const VectorField& x, const Trajectory& chi) {
  const auto& t = chi.grid.nodes();
  const auto udot = discrete_derivative(chi.grid, chi.positions);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
    const Vec uddot = 2.0 * (chi.positions[i - 1] / (h1 * (h1 + h2)) - chi.positions[i] / (h1 * h2) +
                             chi.positions[i + 1] / (h2 * (h1 + h2)));
    const Vec& u = chi.positions[i];
    const Mat dx = x.jacobian(u);
    const Vec rhs = dx.transpose() * x.value(u) + dx * udot[i] - dx.transpose() * udot[i];
    worst = std::max(worst, (uddot - rhs).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

TopologicalLimitReport topological_limit_study(const VectorField& x, const std::vector<double>& lambdas,
                                               const Vec& u0, const Vec& u1,
                                               const ShootingConfig& cfg) {
  TopologicalLimitReport rep;
  std::optional<Trajectory> last;
  for (double lambda : lambdas) {
    LambdaRow row;
    row.lambda = lambda;
    try {
      const auto ex = make_lambda_family(x, lambda);
      const auto set = solve_dirichlet(ex.system, u0, u1, cfg);
      if (set.solutions.empty()) {
        row.failure = to_string(set.classification);
      } else {
        std::size_t best = 0;
        for (std::size_t b = 1; b < set.solutions.size(); ++b)
          if (set.solutions[b].p0.norm() < set.solutions[best].p0.norm()) best = b;
        const auto& tr = set.solutions[best].trajectory;
        row.solved = true;
        row.p0 = set.solutions[best].p0[0];
        row.w = action_functional(ex.system, tr);
        row.second_order_residual = lambda_second_order_residual(x, tr);
        last = tr;
      }
    } catch (const Error& e) {
      row.failure = e.what();
    }
    rep.rows.push_back(std::move(row));
  }

  // Least-squares slope of log|p0| against log(lambda).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& row : rep.rows) {
    if (!row.solved || !(row.lambda > 0.0) || std::abs(row.p0) < 1e-12) continue;
    const double lx = std::log(row.lambda), ly = std::log(std::abs(row.p0));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n >= 2) rep.p0_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  if (last && x.flow) {
    double d = 0.0;
    for (std::size_t k = 0; k < last->size(); ++k)
      d = std::max(d, (last->positions[k] - (*x.flow)(last->grid[k], u0)).lpNorm<Eigen::Infinity>());
    rep.distance_to_flow_line = d;
  }
  return rep;
}

std::vector<std::string> example_names() {
  return {"free-particle", "quartic", "pendulum", "sphere", "cotangent-lift", "lambda-family", "planar"};
}

namespace {

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

VectorField field_from_params(const std::map<std::string, double>& params) {
  if (params.count("linear_rate")) return linear_field(1, params.at("linear_rate"));
  return constant_field(Vec::Constant(1, param(params, "c", 1.0)));
}

}  // namespace

ExampleSystem make_example(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "free-particle") return make_free_particle(param(params, "m", 1.0));
  if (name == "quartic") return make_quartic(param(params, "m", 1.0));
  if (name == "pendulum") return make_pendulum(param(params, "m", 1.0), param(params, "k", 1.0));
  if (name == "sphere") return make_sphere_geodesics();
  if (name == "cotangent-lift") return make_cotangent_lift(field_from_params(params));
  if (name == "lambda-family")
    return make_lambda_family(field_from_params(params), param(params, "lambda", 1.0));
  if (name == "planar")
    return {make_planar_system(param(params, "kinetic", 1.0), param(params, "slope", 0.0)), {}};
  throw Error(ErrorKind::InvalidArgument, "unknown example '" + name + "'");
}

}  // namespace hamfield
