#pragma once

namespace lassokit {

// Standard normal density.
double std_normal_pdf(double x);

// Standard normal distribution function; erfc-based so both tails keep full
// relative accuracy (<= 1e-14 relative for |x| <= 8).
double std_normal_cdf(double x);

// Upper tail 1 - cdf, again erfc-based.
double std_normal_tail(double x);

// Inverse of erf on the open interval (-1, 1).  Rational initial
// approximation polished by two Halley steps against erf; round-trip error
// |erf(erfinv(y)) - y| <= 1e-13 across the domain.
// Throws std::domain_error at or beyond +-1.
double erfinv(double y);

}  // namespace lassokit
