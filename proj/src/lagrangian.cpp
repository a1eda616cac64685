#include "hamfield/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hamfield {

const char* to_string(TangentSource s) {
  return s == TangentSource::FlowJacobian ? "flow-jacobian" : "bvp-continuation";
}

Mat flow_tangent_frame(const Mat& flow_jacobian) {
  const auto n = flow_jacobian.rows();
  Mat frame(2 * n, n);
  frame.topRows(n) = Mat::Identity(n, n);
  frame.bottomRows(n) = flow_jacobian;
  return frame;
}

double max_omega_defect(const Mat& frame) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < frame.cols(); ++i) {
    const auto v = BoundaryTangent::from_stacked(frame.col(i));
    for (Eigen::Index j = i + 1; j < frame.cols(); ++j)
      worst = std::max(worst, std::abs(omega_eval(v, BoundaryTangent::from_stacked(frame.col(j)))));
  }
  return worst;
}

int numerical_rank(const Mat& frame, double rel_cutoff) {
  Eigen::JacobiSVD<Mat> svd(frame);
  const Vec s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  return static_cast<int>((s.array() > rel_cutoff * s[0]).count());
}

double max_principal_angle(const Mat& a, const Mat& b) {
  const Mat qa = Eigen::HouseholderQR<Mat>(a).householderQ() * Mat::Identity(a.rows(), a.cols());
  const Mat qb = Eigen::HouseholderQR<Mat>(b).householderQ() * Mat::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
  const double smin = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
  return std::acos(smin);
}

std::vector<std::pair<Vec, Vec>> random_phase_points(int r, int count, double box,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-box, box);
  std::vector<std::pair<Vec, Vec>> pts;
  for (int i = 0; i < count; ++i) {
    Vec u(r), p(r);
    for (int j = 0; j < r; ++j) u[j] = dist(rng);
    for (int j = 0; j < r; ++j) p[j] = dist(rng);
    pts.emplace_back(u, p);
  }
  return pts;
}

namespace {

void absorb(IsotropyReport& rep, IsotropySample s) {
  ++rep.samples;
  if (s.applicable) {
    ++rep.applicable;
    rep.max_defect = std::max(rep.max_defect, s.defect);
    rep.rank_estimate = rep.applicable == 1 ? s.rank : std::min(rep.rank_estimate, s.rank);
  }
  rep.details.push_back(std::move(s));
}

}  // namespace

IsotropyReport isotropy_defect_flow(const HamiltonianSystem& sys,
                                    const std::vector<std::pair<Vec, Vec>>& initial_points,
                                    const IntegratorConfig& cfg) {
  IsotropyReport rep;
  rep.tangent_source = TangentSource::FlowJacobian;
  rep.dim = sys.dim();
  for (const auto& [u0, p0] : initial_points) {
    IsotropySample s;
    s.a = u0;
    s.b = p0;
    const auto res = integrate_span(sys, 0.0, 1.0, u0, p0, cfg, true);
    if (!res.completed()) {
      s.applicable = false;
      s.reason = "flow incomplete: " + res.status.describe();
    } else {
      s.frame = flow_tangent_frame(res.jacobian);
      s.defect = max_omega_defect(s.frame);
      s.rank = numerical_rank(s.frame);
    }
    absorb(rep, std::move(s));
  }
  return rep;
}

IsotropyReport isotropy_defect_bvp(const HamiltonianSystem& sys,
                                   const std::vector<std::pair<Vec, Vec>>& endpoint_samples,
                                   const ShootingConfig& cfg, double h_fd) {
  IsotropyReport rep;
  rep.tangent_source = TangentSource::BvpContinuation;
  rep.dim = sys.dim();
  rep.rng_seed = cfg.rng_seed;
  const int r = sys.dim();
  for (const auto& [u0, u1] : endpoint_samples) {
    const auto set = solve_dirichlet(sys, u0, u1, cfg);
    if (set.solutions.empty() || set.classification == BvpClass::Continuum) {
      IsotropySample s;
      s.a = u0;
      s.b = u1;
      s.applicable = false;
      s.reason = std::string("no isolated branch: ") + to_string(set.classification);
      absorb(rep, std::move(s));
      continue;
    }
    for (std::size_t b = 0; b < set.solutions.size(); ++b) {
      IsotropySample s;
      s.a = u0;
      s.b = u1;
      s.branch = static_cast<int>(b);
      try {
        const auto sens = branch_sensitivity(sys, u0, u1, set.solutions[b], cfg, h_fd);
        s.frame = Mat::Zero(4 * r, 2 * r);
        for (int j = 0; j < r; ++j) {
          s.frame(j, j) = 1.0;
          s.frame.block(r, j, r, 1) = sens.dp0_du0.col(j);
          s.frame.block(3 * r, j, r, 1) = sens.dp1_du0.col(j);
          s.frame.block(r, r + j, r, 1) = sens.dp0_du1.col(j);
          s.frame(2 * r + j, r + j) = 1.0;
          s.frame.block(3 * r, r + j, r, 1) = sens.dp1_du1.col(j);
        }
        s.defect = max_omega_defect(s.frame);
        s.rank = numerical_rank(s.frame);
      } catch (const Error& e) {
        s.applicable = false;
        s.reason = e.what();
      }
      absorb(rep, std::move(s));
    }
  }
  return rep;
}

}  // namespace hamfield
