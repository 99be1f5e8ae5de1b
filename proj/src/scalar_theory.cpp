#include "lassokit/scalar_theory.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "lassokit/special_functions.hpp"

namespace lassokit {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

// d/dnu of gaussian_tail_second_moment: 2 nu (1 - Phi(nu)) - 2 phi(nu).
double tail_second_moment_derivative(double nu) {
  return 2.0 * (nu * std_normal_tail(nu) - std_normal_pdf(nu));
}

double q_value(double beta, double nu, bool signed_model) {
  double side = signed_model ? 1.0 : 2.0;
  return beta * (1.0 + nu * nu) + side * (1.0 - beta) * gaussian_tail_second_moment(nu);
}

double q_derivative(double beta, double nu, bool signed_model) {
  double side = signed_model ? 1.0 : 2.0;
  return 2.0 * beta * nu + side * (1.0 - beta) * tail_second_moment_derivative(nu);
}

double q_second_derivative(double beta, double nu, bool signed_model) {
  double side = signed_model ? 1.0 : 2.0;
  return 2.0 * beta + 2.0 * side * (1.0 - beta) * std_normal_tail(nu);
}

void check_beta(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in [0, 1)");
  }
}

// Threshold equation residual at candidate alpha for fixed beta.  Strictly
// increasing in alpha on (beta, 1): -inf as alpha -> beta+, positive near 1.
double threshold_equation(double alpha, double beta, bool signed_model) {
  double nu_e;
  double coeff;
  if (signed_model) {
    // argument 2(1-alpha)/(1-beta) - 1 lies in (-1, 1) for alpha in (beta, 1)
    double arg = 2.0 * (1.0 - alpha) / (1.0 - beta) - 1.0;
    nu_e = kSqrt2 * erfinv(arg);
    coeff = 1.0;
  } else {
    double arg = (1.0 - alpha) / (1.0 - beta);
    nu_e = kSqrt2 * erfinv(arg);
    coeff = 2.0;
  }
  return coeff * (1.0 - beta) * std_normal_pdf(nu_e) / alpha - nu_e;
}

}  // namespace

void PhaseParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (!(beta >= 0.0 && beta < alpha)) {
    throw std::invalid_argument("beta must lie in [0, alpha), got " + std::to_string(beta));
  }
}

double gaussian_tail_second_moment(double nu) {
  return (1.0 + nu * nu) * std_normal_tail(nu) - nu * std_normal_pdf(nu);
}

double q_unsigned(double beta, double nu) {
  check_beta(beta);
  if (!(nu >= 0.0)) throw std::invalid_argument("nu must be >= 0");
  return q_value(beta, nu, false);
}

double q_signed(double beta, double nu) {
  check_beta(beta);
  if (!(nu >= 0.0)) throw std::invalid_argument("nu must be >= 0");
  return q_value(beta, nu, true);
}

std::pair<double, double> optimal_nu(double beta, bool signed_model) {
  check_beta(beta);
  if (beta == 0.0) {
    // No support coordinates: q decreases to 0 as nu grows without bound.
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  // q is strictly convex with q'(0) < 0, so the minimizer is the unique root
  // of q'.  Bracket by doubling, then safeguarded Newton (bisection fallback).
  double lo = 0.0, hi = 1.0;
  while (q_derivative(beta, hi, signed_model) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("optimal_nu: failed to bracket the minimizer");
  }
  double nu = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    double g = q_derivative(beta, nu, signed_model);
    if (g > 0.0) hi = nu; else lo = nu;
    double step = g / q_second_derivative(beta, nu, signed_model);
    double next = nu - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // Newton left the bracket
    double delta = std::fabs(next - nu);
    nu = next;
    if (delta <= 1e-12 && std::fabs(q_derivative(beta, nu, signed_model)) <= 1e-10) break;
  }
  return {nu, q_value(beta, nu, signed_model)};
}

double l1_threshold_alpha(double beta, bool signed_model) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("l1_threshold_alpha: beta must lie in (0, 1)");
  }
  // Bracket inside (beta, 1).  The residual is -inf at beta+ and positive
  // near 1, and strictly increasing in between.
  double lo = beta + 1e-13 * (1.0 - beta);
  double hi = 1.0 - 1e-13;
  double f_lo = threshold_equation(lo, beta, signed_model);
  double f_hi = threshold_equation(hi, beta, signed_model);
  if (!(f_lo < 0.0) || !(f_hi > 0.0)) {
    throw std::runtime_error("l1_threshold_alpha: bracket failure at beta=" +
                             std::to_string(beta) + " endpoints f(lo)=" + std::to_string(f_lo) +
                             " f(hi)=" + std::to_string(f_hi));
  }
  // Bisection to a tight interval, with a secant polish inside the bracket.
  double a = lo, b = hi;
  for (int iter = 0; iter < 100 && (b - a) > 1e-14; ++iter) {
    double mid = 0.5 * (a + b);
    double fm = threshold_equation(mid, beta, signed_model);
    if (fm < 0.0) { a = mid; f_lo = fm; } else { b = mid; f_hi = fm; }
  }
  double root = (f_hi != f_lo) ? (a - f_lo * (b - a) / (f_hi - f_lo)) : 0.5 * (a + b);
  if (!(root > a && root < b)) root = 0.5 * (a + b);
  return root;
}

TheoryPoint characterize(const PhaseParams& params) {
  params.validate();
  TheoryPoint point;
  point.params = params;
  if (params.beta == 0.0) {
    // Degenerate no-support case: zero effective width, exact recovery
    // drives the error level to 0 and the dual scalar is unbounded.
    point.alpha_w = 0.0;
    point.nu_star = std::numeric_limits<double>::infinity();
    point.below_threshold = true;
    point.rho = 0.0;
    point.zeta_over_sqrt_n = std::sqrt(params.alpha);
    return point;
  }
  point.alpha_w = l1_threshold_alpha(params.beta, params.signed_model);
  point.nu_star = optimal_nu(params.beta, params.signed_model).first;
  point.below_threshold = point.alpha_w < params.alpha;
  if (point.below_threshold) {
    point.rho = std::sqrt(point.alpha_w / (params.alpha - point.alpha_w));
    point.zeta_over_sqrt_n = std::sqrt(params.alpha - point.alpha_w);
  }
  return point;
}

ContourCurve contour_curve(double rho, bool signed_model,
                           const std::vector<double>& alpha_grid) {
  if (!(rho > 0.0)) throw std::invalid_argument("contour_curve: rho must be > 0");
  ContourCurve curve;
  curve.rho = rho;
  curve.signed_model = signed_model;
  std::vector<double> grid = alpha_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double level = rho * rho / (1.0 + rho * rho);
  for (double alpha : grid) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("contour_curve: grid values must lie in (0, 1)");
    }
    double target = alpha * level;  // required alpha_w, always < alpha
    // alpha_w(beta) is strictly increasing with limit 0 at beta -> 0 and
    // exceeds `target` before beta reaches alpha, so bisection applies.
    double lo = 1e-12, hi = alpha * (1.0 - 1e-9);
    if (l1_threshold_alpha(hi, signed_model) < target) {
      curve.skipped_alphas.push_back(alpha);
      continue;
    }
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-14; ++iter) {
      double mid = 0.5 * (lo + hi);
      if (l1_threshold_alpha(mid, signed_model) < target) lo = mid; else hi = mid;
    }
    curve.points.emplace_back(alpha, 0.5 * (lo + hi));
  }
  return curve;
}

}  // namespace lassokit
