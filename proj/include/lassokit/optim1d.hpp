#pragma once

#include <cmath>
#include <utility>

namespace lassokit {

// Golden-section minimization of a unimodal function on [lo, hi].
// Returns the midpoint of the final bracket; `arg_tol` is the absolute
// tolerance on the argument.
template <class F>
double golden_section_min(F&& f, double lo, double hi, double arg_tol = 1e-10) {
  constexpr double kGolden = 0.61803398874989484820;  // (sqrt(5) - 1)/2
  double a = lo, b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > arg_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Grow [lo, hi] geometrically (doubling hi, starting from [0, 1] by default)
// until the midpoint value drops below both endpoint values, which brackets a
// minimizer of a convex function that eventually increases.  Returns the
// bracket; `second` is capped at `hi_max` if the function kept decreasing.
template <class F>
std::pair<double, double> grow_min_bracket(F&& f, double lo = 0.0, double hi = 1.0,
                                           double hi_max = 1e12) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  while (f_hi <= f_lo && hi < hi_max) {
    hi *= 2.0;
    f_hi = f(hi);
  }
  return {lo, hi};
}

// Minimize a convex function on [lo, +inf): bracket by geometric growth, then
// golden-section inside the bracket.
template <class F>
double minimize_convex_ray(F&& f, double lo = 0.0, double hi0 = 1.0,
                           double arg_tol = 1e-10, double hi_max = 1e12) {
  auto [a, b] = grow_min_bracket(f, lo, hi0, hi_max);
  return golden_section_min(f, a, b, arg_tol);
}

}  // namespace lassokit
