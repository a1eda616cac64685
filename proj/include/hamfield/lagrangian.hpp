#pragma once

// Numerical certificates that the boundary image of the solution space is
// isotropic, and Lagrangian when the tangent frame has full rank 2r.

#include "hamfield/boundary_solver.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hamfield {

enum class TangentSource { FlowJacobian, BvpContinuation };
const char* to_string(TangentSource s);

struct IsotropySample {
  Vec a, b;  // (u0, p0) for flow samples, (u0, u1) for BVP samples
  int branch = 0;
  bool applicable = true;
  std::string reason;
  double defect = 0.0;
  int rank = 0;
  Mat frame;  // 4r x 2r, columns in (du0, dp0, du1, dp1) layout
};

struct IsotropyReport {
  TangentSource tangent_source = TangentSource::FlowJacobian;
  int samples = 0;
  int applicable = 0;
  double max_defect = 0.0;
  int rank_estimate = 0;  // minimum over applicable samples
  int dim = 0;            // r
  std::uint64_t rng_seed = 0;
  std::vector<IsotropySample> details;
  std::string caveat =
      "assumes the solution set is a submanifold; only its consequences are checked";

  bool lagrangian(double tol) const {
    return applicable > 0 && max_defect <= tol && rank_estimate == 2 * dim;
  }
};

// Tangent frame of graph(phi_1) at a point: columns (e_i ; J e_i).
Mat flow_tangent_frame(const Mat& flow_jacobian);

// max |omega(v_i, v_j)| over all pairs of frame columns.
double max_omega_defect(const Mat& frame);

// Singular values above rel_cutoff * sigma_max.
int numerical_rank(const Mat& frame, double rel_cutoff = 1e-8);

// Largest principal angle between the column spaces of a and b (radians).
double max_principal_angle(const Mat& a, const Mat& b);

IsotropyReport isotropy_defect_flow(const HamiltonianSystem& sys,
                                    const std::vector<std::pair<Vec, Vec>>& initial_points,
                                    const IntegratorConfig& cfg);

// Every branch found at each endpoint pair contributes one sample.
IsotropyReport isotropy_defect_bvp(const HamiltonianSystem& sys,
                                   const std::vector<std::pair<Vec, Vec>>& endpoint_samples,
                                   const ShootingConfig& cfg, double h_fd = 1e-5);

// Uniform points in [-box, box]^{2r} split as (u, p), reproducible from seed.
std::vector<std::pair<Vec, Vec>> random_phase_points(int r, int count, double box,
                                                     std::uint64_t seed);

}  // namespace hamfield
