#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace lassokit {

// Problem geometry: alpha = m/n (measurements per dimension), beta = k/n
// (nonzeros per dimension), and whether the nonzero signs are known a priori
// (one-sided model).
struct PhaseParams {
  double alpha = 0.5;
  double beta = 0.1;
  bool signed_model = false;

  // Enforces 0 < alpha <= 1 and 0 <= beta < alpha; throws std::invalid_argument.
  void validate() const;
};

// Asymptotic performance prediction at a phase point.  All values are stored
// at sigma = 1; rho and zeta_over_sqrt_n scale linearly with the noise level.
struct TheoryPoint {
  PhaseParams params;
  // Effective width ratio: the limit of (minimal dual residual)^2 / n.
  double alpha_w = 0.0;
  // Optimal dual scalar.  +infinity sentinel when beta == 0 (serialization
  // layers emit the documented string, never a float infinity).
  double nu_star = 0.0;
  bool below_threshold = false;
  // Worst-case error norm per unit sigma: sqrt(alpha_w / (alpha - alpha_w)).
  std::optional<double> rho;
  // Predicted residual objective per sqrt(n) and unit sigma: sqrt(alpha - alpha_w).
  std::optional<double> zeta_over_sqrt_n;
};

// A fixed-error-level curve beta(alpha) in the phase plane.
struct ContourCurve {
  double rho = 0.0;
  bool signed_model = false;
  std::vector<std::pair<double, double>> points;  // (alpha, beta), alpha strictly increasing
  std::vector<double> skipped_alphas;             // grid values with no solution
};

// Mean squared residual of a standard normal soft-thresholded at level nu:
//   integral_nu^inf (t - nu)^2 phi(t) dt = (1 + nu^2)(1 - Phi(nu)) - nu phi(nu).
double gaussian_tail_second_moment(double nu);

// Per-dimension dual objective at threshold nu with support fraction beta:
// the support contributes (1 + nu^2) per coordinate, off-support coordinates
// contribute the clamped-residual second moment (both tails for the
// sign-unknown model, one tail when signs are known).
double q_unsigned(double beta, double nu);
double q_signed(double beta, double nu);

// Unique minimizer of the strictly convex q(beta, .): returns (nu_star, q_min)
// with |dq/dnu(nu_star)| <= 1e-10.  beta == 0 yields the documented sentinel
// (nu_star = +infinity, q_min = 0).
std::pair<double, double> optimal_nu(double beta, bool signed_model);

// Critical ratio alpha_w in (beta, 1): the root of the transcendental
// threshold equation at the given beta, found by bracketed bisection refined
// with secant steps, |f(alpha_w)| <= 1e-12.
double l1_threshold_alpha(double beta, bool signed_model);

// Full prediction at a phase point.  Above threshold (alpha_w >= alpha) is a
// valid state: rho and zeta_over_sqrt_n stay unset.
TheoryPoint characterize(const PhaseParams& params);

// Trace the curve alpha_w(beta) = alpha * rho^2 / (1 + rho^2) over the given
// alpha grid (values in (0,1); the grid is sorted and deduplicated).  Every
// returned point satisfies characterize(point).rho = rho to 1e-6.
ContourCurve contour_curve(double rho, bool signed_model, const std::vector<double>& alpha_grid);

}  // namespace lassokit
