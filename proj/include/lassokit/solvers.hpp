#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

#include "lassokit/scalar_theory.hpp"

namespace lassokit {

// Requested operation needs a below-threshold phase point.
struct AboveThresholdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The residual constraint cannot be met at any penalty level.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One sampled recovery problem y = A x~ + v.
struct ProblemInstance {
  Eigen::MatrixXd A;        // m x n, i.i.d. standard normal
  Eigen::VectorXd x_tilde;  // k-sparse, nonnegative, nonzeros in the last k coordinates
  Eigen::VectorXd v;        // length m, i.i.d. N(0, sigma^2)
  Eigen::VectorXd y;        // A * x_tilde + v
  double sigma = 1.0;
  std::uint64_t seed = 0;

  int m() const { return static_cast<int>(A.rows()); }
  int n() const { return static_cast<int>(A.cols()); }
  int k() const { return static_cast<int>((x_tilde.array() != 0.0).count()); }
};

struct SolveReport {
  Eigen::VectorXd x_hat;
  double w_norm = 0.0;     // ||x_hat - x_tilde||
  double zeta = 0.0;       // terminal ||y - A x_hat||
  double objective = 0.0;  // solver's own objective at x_hat (see each solver)
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;  // measure depends on the solver; see each solver
  bool degenerate_residual = false;
};

struct SolveOptions {
  int max_iterations = 200000;  // cap on gradient-type iterations (summed over stages)
  // Constrained solver: converged when the unit-step projected-gradient norm
  // falls below this, or when the relative objective decrease over a
  // 50-iteration window falls below 1e-12.
  double kkt_tolerance = 1e-8;
  // Penalized solver: declared subgradient-inclusion tolerance is
  // subgradient_tolerance_scale * (1 + lambda).
  double subgradient_tolerance_scale = 1e-5;
  double outer_tolerance = 1e-10;  // penalized: residual fixed-point tolerance
  int max_outer_iterations = 100;
  double residual_match_rel = 1e-6;  // socp: |residual - r_socp| <= rel * r_socp
  int max_bisection_iterations = 60;
  const Eigen::VectorXd* warm_start = nullptr;  // optional initial iterate
};

// Euclidean projection onto {z : ||z||_1 <= radius}: soft threshold at the
// exact level found by a stable descending sort of the magnitudes.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& x, double radius);

// Euclidean projection onto {z : z >= 0, ||z||_1 <= radius}: clamp to the
// nonnegative orthant, then threshold the clamped vector (exact for this
// intersection because the threshold is recomputed after clamping).
Eigen::VectorXd project_l1_ball_nonneg(const Eigen::VectorXd& x, double radius);

// minimize ||y - A x||_2 over the l1 ball of the given radius (intersected
// with the nonnegative orthant when signed_model), by accelerated projected
// gradient on the smooth surrogate 0.5 ||y - A x||^2 with exact projection.
// report.objective = zeta = ||y - A x_hat||; kkt_residual = unit-step
// projected-gradient norm of the surrogate.
SolveReport solve_constrained_lasso(const ProblemInstance& inst, double radius,
                                    bool signed_model, const SolveOptions& options = {});

// minimize ||y - A x||_2 + lambda ||x||_1 (residual norm NOT squared; plus
// x >= 0 when signed_model), by alternating scalarization: at residual level
// r the problem is a squared-loss shrinkage problem with weight lambda * r,
// iterated to a fixed point.  report.objective stores the shifted value
// ||y - A x_hat|| + lambda ||x_hat||_1 - lambda ||x_tilde||_1; report.zeta the
// terminal residual norm; kkt_residual the subgradient-inclusion distance
// (max norm) of the non-squared objective.
SolveReport solve_penalized_lasso(const ProblemInstance& inst, double lambda_lasso,
                                  bool signed_model, const SolveOptions& options = {});

// minimize ||x||_1 subject to ||y - A x||_2 <= r_socp (plus x >= 0 when
// signed_model), by bisection on the penalty level of the non-squared
// penalized family (the residual is monotone in the penalty).
// report.objective = ||x_hat||_1; kkt_residual = |zeta - r_socp| / r_socp.
SolveReport solve_socp(const ProblemInstance& inst, double r_socp, bool signed_model,
                       const SolveOptions& options = {});

// Penalty level calibrated to the phase point: the optimal dual scalar.
double lambda_from_theory(const PhaseParams& params);

// Residual budget calibrated to the phase point: sigma sqrt(alpha - alpha_w) sqrt(n).
double r_socp_from_theory(const PhaseParams& params, double sigma, int n);

}  // namespace lassokit
