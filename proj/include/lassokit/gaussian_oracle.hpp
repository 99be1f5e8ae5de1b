#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

namespace lassokit {

// Raised when the dual maximization is pinned against the square-root domain
// boundary (residual norm reaching ||g||), the finite-sample signature of a
// phase point outside the recoverable region, or when the error-norm formula
// has a nonpositive denominator.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A sampled standard-normal pair: g of length m, h of length n, regenerable
// bit-identically from the seed (g is drawn first, then h).
struct GaussianPair {
  Eigen::VectorXd g;
  Eigen::VectorXd h;
  std::uint64_t seed = 0;
};

// Solution of the dual maximization on one sampled pair.
struct OracleSample {
  double xi_ov = 0.0;          // optimal dual objective value
  double nu_hat = 0.0;         // optimal dual scalar
  Eigen::VectorXd lambda_hat;  // optimal dual vector; in [0, 2 nu_hat] per
                               // coordinate (sign-unknown) or [0, inf) (sign-known)
  double w_hat_norm = 0.0;     // predicted error norm (0 when not overwhelming)
  bool overwhelming = false;   // ||h + nu_hat 1 - lambda_hat|| < ||g||
};

struct GenericResult {
  double xi_gen = 0.0;  // minimal dual residual norm ||h + nu 1 - lambda(nu)||
  double nu_gen = 0.0;  // minimizing nu
};

GaussianPair sample_pair(int m, int n, std::uint64_t seed);

// Value of the dual objective
//   sigma * sqrt(||g||^2 - ||h + nu 1 - lambda||^2) - sum_{support} lambda_i x~_i
// at an arbitrary feasible point (no optimization).  Returns -infinity when
// the square root would go imaginary.  Support coordinates are the trailing
// nonzeros of x_tilde.
double dual_objective_value(double sigma, const GaussianPair& pair,
                            const Eigen::VectorXd& x_tilde, bool signed_model,
                            double nu, const Eigen::VectorXd& lambda);

// Maximize the dual objective over nu >= 0 and the model's lambda set
// (0 <= lambda_i <= 2 nu for the sign-unknown model) by projected gradient
// ascent on the concave objective; the returned point has projected-gradient
// norm <= grad_tol * (1 + |xi_ov|).  x_tilde carries its k nonzero
// (nonnegative) entries in the last k coordinates.
// Throws DivergenceError when the maximizer is pinned at the domain boundary.
OracleSample xi_ov_general(double sigma, const GaussianPair& pair,
                           const Eigen::VectorXd& x_tilde, double grad_tol = 1e-8);

// Same maximization with the sign-known lambda set (lambda_i >= 0, no upper
// bound).
OracleSample xi_ov_signed_general(double sigma, const GaussianPair& pair,
                                  const Eigen::VectorXd& x_tilde, double grad_tol = 1e-8);

// Worst-case (unbounded-magnitude) variant: support coordinates pin
// lambda_i = 0, off-support coordinates are eliminated by their closed-form
// clamp, and the remaining one-dimensional problem in nu is minimized by
// golden section.  k = 0 grows nu until the residual falls below 1e-6 sqrt(n).
GenericResult xi_ov_generic(const GaussianPair& pair, int k, bool signed_model);

// Predicted error norm sigma * r / sqrt(||g||^2 - r^2) with
// r = ||h + nu_hat 1 - lambda_hat||.  Requires sample.overwhelming; throws
// DivergenceError otherwise or when the denominator is nonpositive.
double w_hat_norm(double sigma, const GaussianPair& pair, const OracleSample& sample);

// Inner maximum of the d-parameterized dual form
//   sqrt(d^2 + sigma^2) ||g|| - d ||h + nu 1 - lambda|| - sum_{support} lambda_i x~_i
// over the model's (nu, lambda) set; concave in (nu, lambda) for fixed d and
// convex in d, with min over d equal to the xi_ov maximum.
double xi_d_objective(double d, double sigma, const GaussianPair& pair,
                      const Eigen::VectorXd& x_tilde, bool signed_model,
                      double grad_tol = 1e-10);

}  // namespace lassokit
