#pragma once

// Two-point boundary-value problems for Hamilton's equations on [0, 1]:
// Newton shooting with multistart, Hamilton's principal function W and the
// generating-function identities dW = alpha, theory classification
// (Dirichlet / locally Dirichlet / neither) and natural boundary conditions
// for Lagrangian boundary submanifolds of graph type.

#include "hamfield/integrators.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hamfield {

struct ShootingConfig {
  IntegratorConfig integrator;
  double newton_tol = 1e-10;
  int max_iter = 80;
  // Explicit seeds for the unknowns. When empty, seed_count seeds are drawn
  // over [-seed_box, seed_box]^m: evenly spaced for m = 1, otherwise from a
  // fixed-seed generator.
  std::vector<Vec> seeds;
  int seed_count = 32;
  double seed_box = 6.0;
  std::uint64_t rng_seed = 20160317;
  double distinctness_radius = 1e-4;
  double singular_condition = 1e10;

  void validate() const;
};

enum class BvpClass { Unique, MultipleIsolated, Continuum, NoSolution };
const char* to_string(BvpClass c);

struct BvpSolution {
  Trajectory trajectory;
  Vec unknowns;      // shooting unknowns (momentum coordinates, or (u0, p0) for graph boundaries)
  Vec p0;
  Vec residual;
  double residual_norm = 0.0;
  double condition = 0.0;  // condition number of the shooting Jacobian
  bool singular = false;
  int seed_index = -1;
};

struct BvpSolutionSet {
  Vec u0, u1;
  std::vector<BvpSolution> solutions;  // sorted lexicographically by p0
  BvpClass classification = BvpClass::NoSolution;
  // Distinct-solution count is unchanged when the distinctness radius is halved.
  bool isolation_stable = true;
  // Evidence for a Continuum verdict: distance reached along the null direction.
  double family_spread = 0.0;
  int converged_seeds = 0;
  int total_seeds = 0;
  std::string note = "heuristic numerical verdict (multistart Newton shooting)";
};

struct ShootResidual {
  Vec residual;   // u(1; u0, p0) - u1, angular coordinates wrapped
  Mat jacobian;   // d u(1) / d p0
};

// Throws Error(FlowIncomplete) if the flow from (u0, p0) does not reach t = 1.
ShootResidual shoot_residual(const HamiltonianSystem& sys, const Vec& u0, const Vec& p0, const Vec& u1,
                             const ShootingConfig& cfg);

// Admissible-momentum basis at u0 (identity unless the system is embedded).
Mat momentum_basis(const HamiltonianSystem& sys, const Vec& u0);

std::vector<Vec> default_seeds(int dim, const ShootingConfig& cfg);

BvpSolutionSet solve_dirichlet(const HamiltonianSystem& sys, const Vec& u0, const Vec& u1,
                               const ShootingConfig& cfg);

// Single Newton solve from one seed (momentum coordinates); nullopt when it
// fails to converge.
std::optional<BvpSolution> solve_dirichlet_from(const HamiltonianSystem& sys, const Vec& u0,
                                                const Vec& u1, const Vec& seed,
                                                const ShootingConfig& cfg);

double hamilton_principal_function(const BvpSolutionSet& set, const HamiltonianSystem& sys,
                                   std::size_t branch);
double hamilton_principal_function(const HamiltonianSystem& sys, const Vec& u0, const Vec& u1,
                                   const ShootingConfig& cfg, std::size_t branch);

// Derivatives of the boundary momenta and of W along one branch, obtained by
// re-solving at displaced endpoints with the branch's p0 as the only seed.
struct BranchSensitivity {
  Vec p0, p1;
  double w = 0.0;
  Vec dw_du0, dw_du1;  // centered differences of W
  Mat dp0_du0, dp0_du1, dp1_du0, dp1_du1;
  double max_p0_jump = 0.0;
};

// Throws Error(BranchLost) when the continuation fails or jumps branches.
BranchSensitivity branch_sensitivity(const HamiltonianSystem& sys, const Vec& u0, const Vec& u1,
                                     const BvpSolution& base, const ShootingConfig& cfg,
                                     double h_fd = 1e-5);

struct GeneratingFunctionDefects {
  double defect_u1 = 0.0;        // |dW/du1 - p1|
  double defect_u0 = 0.0;        // |dW/du0 + p0|
  double symmetry_defect = 0.0;  // asymmetry of the Hessian of W built from the momenta
  double w = 0.0;
};

GeneratingFunctionDefects generating_function_check(const HamiltonianSystem& sys, const Vec& u0,
                                                    const Vec& u1, const ShootingConfig& cfg,
                                                    std::size_t branch, double h_fd = 1e-5);

enum class TheoryVerdict { Dirichlet, LocallyDirichlet, Neither };
const char* to_string(TheoryVerdict v);

struct PairVerdict {
  Vec u0, u1;
  BvpClass classification = BvpClass::NoSolution;
  int solutions = 0;
  bool open_neighbourhood = true;
};

struct TheoryReport {
  TheoryVerdict verdict = TheoryVerdict::Neither;
  std::vector<PairVerdict> pairs;
  std::optional<std::size_t> witness;  // index of the pair that rules out (locally) Dirichlet
  std::string evidence;
  std::string note = "heuristic numerical verdict over the sampled endpoint pairs";
};

TheoryReport classify_theory(const HamiltonianSystem& sys,
                             const std::vector<std::pair<Vec, Vec>>& endpoint_samples,
                             const ShootingConfig& cfg, double openness_probe = 1e-3);

// L = graph(dF) over Q x Q: natural conditions p1 = dF/du1, p0 = -dF/du0.
struct GraphBoundary {
  std::function<double(const Vec& u0, const Vec& u1)> F;
  std::function<std::pair<Vec, Vec>(const Vec& u0, const Vec& u1)> gradient;  // (dF/du0, dF/du1)
};

struct FixedEndpoints {
  Vec u0, u1;
};

using LagrangianBoundary = std::variant<GraphBoundary, FixedEndpoints>;

// For graph boundaries the unknowns are (u0, p0) and cfg.seeds must hold
// 2r-vectors. Fixed endpoints route to solve_dirichlet.
BvpSolutionSet solve_with_lagrangian_boundary(const HamiltonianSystem& sys,
                                              const LagrangianBoundary& boundary,
                                              const ShootingConfig& cfg);

}  // namespace hamfield
