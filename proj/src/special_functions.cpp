#include "lassokit/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace lassokit {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;   // 1/sqrt(2*pi)
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;     // 1/sqrt(2)
constexpr double kTwoOverSqrtPi = 1.1283791670955125738961589031215; // 2/sqrt(pi) = erf'(0)

// Rational approximation of the standard normal quantile (Acklam's
// coefficients, ~1.15e-9 relative error), evaluated from pieces that avoid
// cancellation: `half_y` = p - 1/2 for the central region and `tail_mass`
// = 1 - p for the upper region.  Used only as the starting point for the
// Halley refinement below.
double central_quantile_estimate(double half_y) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  double r = half_y * half_y;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * half_y /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double upper_tail_quantile_estimate(double tail_mass) {
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  double q = std::sqrt(-2.0 * std::log(tail_mass));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

// One Halley step for f(x) = erf(x) - y.  With f'' = -2x f' the update has
// the closed form x+ = x - u / (1 + u x), u = (erf(x) - y)/erf'(x).
double halley_erf_step(double x, double y) {
  double fp = kTwoOverSqrtPi * std::exp(-x * x);
  if (fp <= 0.0) return x;  // derivative underflowed; x already deep in a tail
  double u = (std::erf(x) - y) / fp;
  return x - u / (1.0 + u * x);
}

}  // namespace

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_tail(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double erfinv(double y) {
  if (!(y > -1.0 && y < 1.0)) {
    throw std::domain_error("erfinv: argument must lie strictly inside (-1, 1)");
  }
  if (y == 0.0) return 0.0;
  // Work on |y| and restore the sign.  erfinv(y) = Phi^{-1}((1+y)/2)/sqrt(2),
  // with the quantile estimated from exactly-computed pieces: p - 1/2 = y/2
  // centrally, 1 - p = (1-y)/2 in the tail.
  double ay = std::fabs(y);
  double tail_mass = 0.5 * (1.0 - ay);
  double x = tail_mass < 0.02425 ? upper_tail_quantile_estimate(tail_mass)
                                 : central_quantile_estimate(0.5 * ay);
  x *= kInvSqrt2;
  x = halley_erf_step(x, ay);
  x = halley_erf_step(x, ay);
  return y < 0.0 ? -x : x;
}

}  // namespace lassokit
