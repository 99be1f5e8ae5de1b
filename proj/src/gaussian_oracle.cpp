#include "lassokit/gaussian_oracle.hpp"

#include <cmath>
#include <algorithm>
#include <limits>

#include "lassokit/optim1d.hpp"
#include "lassokit/rng.hpp"

namespace lassokit {

namespace {

constexpr double kDomainGuard = 0.999999;   // iterates keep R^2 < guard * ||g||^2
constexpr double kBoundaryPin = 0.999;      // final R^2 beyond this signals divergence
constexpr double kArmijo = 1e-4;
constexpr int kMaxIterations = 50000;

// Shared state for the two concave dual forms:
//   sqrt form:   sigma * sqrt(||g||^2 - R^2) - sum_i lambda_i x~_i
//   linear form: sqrt(d^2 + sigma^2) * ||g|| - d * R - sum_i lambda_i x~_i
// with R = ||h + nu 1 - lambda||.  Coordinates with x~_i = 0 pay nothing, so
// no layout assumption is needed here.
struct DualSpec {
  const Eigen::VectorXd* h;
  const Eigen::VectorXd* x_tilde;  // may be null => all-zero
  double g_norm_sq = 0.0;
  double g_norm = 0.0;
  bool signed_model = false;
  bool sqrt_form = true;
  double sigma = 1.0;
  double d = 0.0;

  double pay(const Eigen::VectorXd& lambda) const {
    return x_tilde ? lambda.dot(*x_tilde) : 0.0;
  }

  double value(double r_sq, double paid) const {
    if (sqrt_form) {
      double s_sq = g_norm_sq - r_sq;
      if (s_sq <= 0.0) return -std::numeric_limits<double>::infinity();
      return sigma * std::sqrt(s_sq) - paid;
    }
    return std::sqrt(d * d + sigma * sigma) * g_norm - d * std::sqrt(r_sq) - paid;
  }

  // Multiplier c in dF/dlambda_i = c * r_i - x~_i and dF/dnu = -c * sum(r).
  double grad_scale(double r_sq) const {
    if (sqrt_form) return sigma / std::sqrt(g_norm_sq - r_sq);
    double r = std::sqrt(r_sq);
    return r > 0.0 ? d / r : 0.0;
  }
};

struct AscentResult {
  double value = 0.0;
  double nu = 0.0;
  Eigen::VectorXd lambda;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

void project_lambda(const DualSpec& spec, double nu, Eigen::VectorXd& lambda) {
  if (spec.signed_model) {
    lambda = lambda.cwiseMax(0.0);
  } else {
    lambda = lambda.cwiseMax(0.0).cwiseMin(2.0 * nu);
  }
}

// Closed-form residual-minimizing lambda at fixed nu with support coordinates
// (x~_i > 0) pinned to zero: off-support clamp to the model's box.
Eigen::VectorXd clamp_lambda(const DualSpec& spec, double nu, bool pin_support) {
  const Eigen::VectorXd& h = *spec.h;
  Eigen::VectorXd lambda = (h.array() + nu).matrix();
  project_lambda(spec, nu, lambda);
  if (pin_support && spec.x_tilde) {
    for (int i = 0; i < lambda.size(); ++i) {
      if ((*spec.x_tilde)(i) != 0.0) lambda(i) = 0.0;
    }
  }
  return lambda;
}

// Projected gradient ascent with backtracking (halving from 1, Armijo 1e-4).
// For the sign-unknown model the lambda box [0, 2 nu] moves with nu, so the
// nu component uses the envelope derivative of the lambda-maximized
// objective: coordinates held at the upper bound contribute 2 * dF/dlambda_i
// to dF/dnu.  With that correction the projected-gradient norm vanishes
// exactly at the constrained maximum.
//
// The search direction is the gradient under a diagonal metric that equalizes
// the two curvature scales (the lambda block has curvature ~c, the nu
// coordinate ~c*n because it sums every residual); the clamp projection is
// exact under a diagonal metric, and the stationarity test below stays the
// plain unit-step projected-gradient norm.
AscentResult ascend(const DualSpec& spec, double nu0, Eigen::VectorXd lambda0,
                    double grad_tol, int max_iterations = kMaxIterations) {
  const Eigen::VectorXd& h = *spec.h;
  const int n = static_cast<int>(h.size());

  double nu = std::max(nu0, 0.0);
  Eigen::VectorXd lambda = std::move(lambda0);
  project_lambda(spec, nu, lambda);

  Eigen::VectorXd r = h.array() + nu - lambda.array();
  double r_sq = r.squaredNorm();
  double paid = spec.pay(lambda);
  double value = spec.value(r_sq, paid);

  Eigen::VectorXd grad_lambda(n), lambda_cand(n), r_cand(n);
  AscentResult out;

  for (int iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter + 1;
    const double c = spec.grad_scale(r_sq);
    grad_lambda = c * r;
    if (spec.x_tilde) grad_lambda -= *spec.x_tilde;
    double grad_nu = -c * r.sum();
    if (!spec.signed_model) {
      // Envelope correction for upper-bound-active coordinates.
      const double active_at = 2.0 * nu - 1e-12 * (1.0 + nu);
      for (int i = 0; i < n; ++i) {
        if (lambda(i) >= active_at && grad_lambda(i) > 0.0) {
          grad_nu += 2.0 * grad_lambda(i);
        }
      }
    }

    // Stationarity measure: unit-step projected displacement, lambda measured
    // against the current box.
    double pg_nu = nu - std::max(nu + grad_nu, 0.0);
    double pg_sq = pg_nu * pg_nu;
    for (int i = 0; i < n; ++i) {
      double moved = lambda(i) + grad_lambda(i);
      if (moved < 0.0) moved = 0.0;
      if (!spec.signed_model && moved > 2.0 * nu) moved = 2.0 * nu;
      double diff = lambda(i) - moved;
      pg_sq += diff * diff;
    }
    if (std::sqrt(pg_sq) <= grad_tol * (1.0 + std::fabs(value))) {
      out.converged = true;
      break;
    }

    const double precond = c > 1e-300 ? 1.0 / c : 1.0;
    const double dir_nu = grad_nu * precond / n;

    double step = 1.0;
    bool accepted = false;
    while (step >= 1e-18) {
      double nu_cand = std::max(nu + step * dir_nu, 0.0);
      lambda_cand = lambda + (step * precond) * grad_lambda;
      project_lambda(spec, nu_cand, lambda_cand);
      r_cand = h.array() + nu_cand - lambda_cand.array();
      double r_sq_cand = r_cand.squaredNorm();
      if (!spec.sqrt_form || r_sq_cand < kDomainGuard * spec.g_norm_sq) {
        double paid_cand = spec.pay(lambda_cand);
        double value_cand = spec.value(r_sq_cand, paid_cand);
        double along = grad_nu * (nu_cand - nu) + grad_lambda.dot(lambda_cand - lambda);
        bool ok = along > 0.0 ? value_cand >= value + kArmijo * along : value_cand > value;
        if (ok) {
          nu = nu_cand;
          lambda.swap(lambda_cand);
          r.swap(r_cand);
          r_sq = r_sq_cand;
          paid = paid_cand;
          value = value_cand;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent direction left at machine step size
  }

  out.value = value;
  out.nu = nu;
  out.lambda = std::move(lambda);
  out.residual_norm = std::sqrt(r_sq);
  return out;
}

// Exact lambda-block maximizer at fixed nu.  Stationarity couples the
// coordinates only through one scalar multiplier (c in dF/dlambda_i =
// c r_i - x~_i), so given that scalar every lambda_i is a box clamp, and the
// scalar itself solves a monotone one-dimensional equation:
//   sqrt form:   r_i = x~_i u / sigma, u = sqrt(||g||^2 - R^2):
//                root of  u^2 + R(u)^2 - ||g||^2  on [0, ||g||]
//   linear form: r_i = x~_i R / d:  root of  ||r(R)|| - R  (the clamp
//                saturates, so ||r(R)|| is bounded and a crossing exists)
// Bisection runs to floating-point exhaustion, which makes the fixed-nu value
// exact to machine precision; the gradient ascent never reaches that in its
// zigzag endgame.
struct InnerSolution {
  bool feasible = false;
  double value = -std::numeric_limits<double>::infinity();
  double nu = 0.0;
  double r_norm = 0.0;
  Eigen::VectorXd lambda;
};

InnerSolution inner_exact(const DualSpec& spec, double nu) {
  const Eigen::VectorXd& h = *spec.h;
  const int n = static_cast<int>(h.size());
  InnerSolution out;
  out.nu = nu;
  if (nu < 0.0 || !std::isfinite(nu)) return out;

  Eigen::VectorXd lambda(n);
  // Clamped lambda for support residual target t * x~_i; returns R^2.
  auto fill = [&](double t) {
    double r_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      double xt = spec.x_tilde ? (*spec.x_tilde)(i) : 0.0;
      double l = h(i) + nu - xt * t;
      if (l < 0.0) l = 0.0;
      if (!spec.signed_model && l > 2.0 * nu) l = 2.0 * nu;
      lambda(i) = l;
      double r = h(i) + nu - l;
      r_sq += r * r;
    }
    return r_sq;
  };

  if (spec.sqrt_form) {
    auto phi = [&](double u) { return u * u + fill(u / spec.sigma) - spec.g_norm_sq; };
    if (phi(0.0) >= 0.0) return out;  // clamp floor already at the domain boundary
    double lo = 0.0, hi = spec.g_norm;
    for (int iter = 0; iter < 200; ++iter) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (phi(mid) >= 0.0 ? hi : lo) = mid;
    }
    double r_sq = fill(0.5 * (lo + hi) / spec.sigma);
    out.feasible = r_sq < spec.g_norm_sq;
    if (!out.feasible) return out;
    out.value = spec.value(r_sq, spec.pay(lambda));
    out.r_norm = std::sqrt(r_sq);
    out.lambda = std::move(lambda);
    return out;
  }

  if (spec.d == 0.0) {  // nothing multiplies the residual; only the payment counts
    double r_sq = fill(1e18);  // support lambdas clamp to their zero-payment end
    out.feasible = true;
    out.value = spec.value(r_sq, spec.pay(lambda));
    out.r_norm = std::sqrt(r_sq);
    out.lambda = std::move(lambda);
    return out;
  }

  auto chi = [&](double r_target) {
    return std::sqrt(fill(r_target / spec.d)) - r_target;
  };
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (chi(hi) > 0.0 && guard++ < 200) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (chi(mid) <= 0.0 ? hi : lo) = mid;
  }
  double r_sq = fill(0.5 * (lo + hi) / spec.d);
  out.feasible = true;
  out.value = spec.value(r_sq, spec.pay(lambda));
  out.r_norm = std::sqrt(r_sq);
  out.lambda = std::move(lambda);
  return out;
}

// One-dimensional concave maximization of the exactly-evaluated partial
// maximum F(nu), bracketed by an uphill walk from the ascent's iterate.  The
// ascent supplies the neighborhood and the divergence certificate; this step
// replaces its slow final zigzag.
InnerSolution polish(const DualSpec& spec, double nu_center) {
  auto F = [&](double nu) { return inner_exact(spec, nu).value; };
  double m = std::max(nu_center, 0.0), fm = F(m);
  double step = 0.25 * (1.0 + m);
  double lo = std::max(0.0, m - step), hi = m + step;
  double flo = F(lo), fhi = F(hi);
  int guard = 0;
  while (fhi > fm && guard++ < 100) {
    lo = m;
    m = hi;
    fm = fhi;
    step *= 2.0;
    hi = m + step;
    fhi = F(hi);
  }
  guard = 0;
  while (flo > fm && lo > 0.0 && guard++ < 100) {
    hi = m;
    m = lo;
    fm = flo;
    step *= 2.0;
    lo = std::max(0.0, m - step);
    flo = F(lo);
  }
  double nu_star =
      golden_section_min([&](double nu) { return -F(nu); }, lo, hi, 1e-12 * (1.0 + m));
  InnerSolution best = inner_exact(spec, nu_star);
  // Keep the walk's center probe if golden somehow landed worse.
  if (fm > best.value) {
    InnerSolution at_m = inner_exact(spec, m);
    if (at_m.value > best.value) best = std::move(at_m);
  }
  return best;
}

void check_x_tilde(const GaussianPair& pair, const Eigen::VectorXd& x_tilde) {
  if (x_tilde.size() != pair.h.size()) {
    throw std::invalid_argument("x_tilde length must match h");
  }
  if ((x_tilde.array() < 0.0).any()) {
    throw std::invalid_argument("x_tilde entries must be nonnegative");
  }
}

// Low-residual starting point for the ascent.  With a nonzero signal the
// support-pinned clamp residual is strictly convex in nu with a proper
// interior minimum, and for large magnitudes that minimizer is already close
// to the maximizer of the full dual.  Without a signal nothing is ever paid,
// so the smallest nu whose clamp cancels every coordinate is optimal.
void initial_point(const DualSpec& spec, double& nu0, Eigen::VectorXd& lambda0) {
  const Eigen::VectorXd& h = *spec.h;
  const bool has_support = spec.x_tilde && (spec.x_tilde->array() != 0.0).any();

  auto clamped_residual_sq = [&](double nu, bool pin_support) {
    double total = 0.0;
    for (int i = 0; i < h.size(); ++i) {
      double residual;
      if (pin_support && spec.x_tilde && (*spec.x_tilde)(i) != 0.0) {
        residual = h(i) + nu;
      } else if (spec.signed_model) {
        residual = std::min(h(i) + nu, 0.0);
      } else {
        residual = std::max(std::fabs(h(i)) - nu, 0.0);
      }
      total += residual * residual;
    }
    return total;
  };

  if (!has_support) {
    double needed = 0.0;
    for (int i = 0; i < h.size(); ++i) {
      needed = std::max(needed, spec.signed_model ? -h(i) : std::fabs(h(i)));
    }
    nu0 = needed;
    lambda0 = clamp_lambda(spec, nu0, /*pin_support=*/false);
    return;
  }

  auto pinned = [&](double nu) { return clamped_residual_sq(nu, true); };
  nu0 = minimize_convex_ray(pinned, 0.0, 1.0, 1e-6, 1e12);
  if (!spec.sqrt_form || pinned(nu0) < kDomainGuard * spec.g_norm_sq) {
    lambda0 = clamp_lambda(spec, nu0, /*pin_support=*/true);
    return;
  }
  // Support-pinned start infeasible (phase point at or past the boundary):
  // take the smallest nu whose all-coordinate clamp clears half the budget
  // and let the ascent trade off the support payments.
  double hi = 1.0;
  int guard = 0;
  while (clamped_residual_sq(hi, false) > 0.5 * spec.g_norm_sq && guard++ < 200) hi *= 2.0;
  double lo = 0.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-9 * (1.0 + hi); ++iter) {
    double mid = 0.5 * (lo + hi);
    if (clamped_residual_sq(mid, false) > 0.5 * spec.g_norm_sq) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  nu0 = hi;
  lambda0 = clamp_lambda(spec, nu0, /*pin_support=*/false);
}

OracleSample run_general(double sigma, const GaussianPair& pair,
                         const Eigen::VectorXd& x_tilde, bool signed_model,
                         double grad_tol) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  check_x_tilde(pair, x_tilde);
  DualSpec spec;
  spec.h = &pair.h;
  spec.x_tilde = &x_tilde;
  spec.g_norm_sq = pair.g.squaredNorm();
  spec.g_norm = std::sqrt(spec.g_norm_sq);
  spec.signed_model = signed_model;
  spec.sqrt_form = true;
  spec.sigma = sigma;

  double nu0;
  Eigen::VectorXd lambda0;
  initial_point(spec, nu0, lambda0);
  double r0_sq = (pair.h.array() + nu0 - lambda0.array()).matrix().squaredNorm();
  if (r0_sq >= kDomainGuard * spec.g_norm_sq) {
    throw DivergenceError("dual maximization: no feasible point clears the square-root domain");
  }

  AscentResult res = ascend(spec, nu0, std::move(lambda0), grad_tol);
  if (res.residual_norm * res.residual_norm >= kBoundaryPin * spec.g_norm_sq) {
    throw DivergenceError(
        "dual maximization pinned at the domain boundary; phase point outside the "
        "recoverable region");
  }

  InnerSolution exact = polish(spec, res.nu);
  if (exact.feasible && exact.value >= res.value) {
    res.value = exact.value;
    res.nu = exact.nu;
    res.lambda = std::move(exact.lambda);
    res.residual_norm = exact.r_norm;
    if (res.residual_norm * res.residual_norm >= kBoundaryPin * spec.g_norm_sq) {
      throw DivergenceError(
          "dual maximization pinned at the domain boundary; phase point outside the "
          "recoverable region");
    }
  }

  OracleSample sample;
  sample.xi_ov = res.value;
  sample.nu_hat = res.nu;
  sample.lambda_hat = std::move(res.lambda);
  sample.overwhelming = res.residual_norm < spec.g_norm;
  if (sample.overwhelming) {
    double s_sq = spec.g_norm_sq - res.residual_norm * res.residual_norm;
    sample.w_hat_norm = sigma * res.residual_norm / std::sqrt(s_sq);
  }
  return sample;
}

}  // namespace

GaussianPair sample_pair(int m, int n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("sample_pair: m and n must be >= 1");
  GaussianPair pair;
  pair.seed = seed;
  pair.g.resize(m);
  pair.h.resize(n);
  GaussianStream stream(seed);
  for (int i = 0; i < m; ++i) pair.g(i) = stream.next();
  for (int i = 0; i < n; ++i) pair.h(i) = stream.next();
  return pair;
}

double dual_objective_value(double sigma, const GaussianPair& pair,
                            const Eigen::VectorXd& x_tilde, bool signed_model,
                            double nu, const Eigen::VectorXd& lambda) {
  check_x_tilde(pair, x_tilde);
  if (lambda.size() != pair.h.size()) {
    throw std::invalid_argument("lambda length must match h");
  }
  double r_sq = (pair.h.array() + nu - lambda.array()).matrix().squaredNorm();
  double s_sq = pair.g.squaredNorm() - r_sq;
  if (s_sq <= 0.0) return -std::numeric_limits<double>::infinity();
  return sigma * std::sqrt(s_sq) - lambda.dot(x_tilde);
}

OracleSample xi_ov_general(double sigma, const GaussianPair& pair,
                           const Eigen::VectorXd& x_tilde, double grad_tol) {
  return run_general(sigma, pair, x_tilde, /*signed_model=*/false, grad_tol);
}

OracleSample xi_ov_signed_general(double sigma, const GaussianPair& pair,
                                  const Eigen::VectorXd& x_tilde, double grad_tol) {
  return run_general(sigma, pair, x_tilde, /*signed_model=*/true, grad_tol);
}

GenericResult xi_ov_generic(const GaussianPair& pair, int k, bool signed_model) {
  const Eigen::VectorXd& h = pair.h;
  const int n = static_cast<int>(h.size());
  if (k < 0 || k >= n) throw std::invalid_argument("xi_ov_generic: need 0 <= k < n");

  auto residual_sq = [&](double nu) {
    double total = 0.0;
    for (int i = 0; i < n - k; ++i) {
      double residual;
      if (signed_model) {
        residual = std::min(h(i) + nu, 0.0);
      } else {
        residual = std::max(std::fabs(h(i)) - nu, 0.0);
      }
      total += residual * residual;
    }
    for (int i = n - k; i < n; ++i) {
      double residual = h(i) + nu;
      total += residual * residual;
    }
    return total;
  };

  GenericResult out;
  if (k == 0) {
    // Off-support clamps drive the residual to exactly zero once nu clears
    // every |h_i|; report the first doubling step that does.
    double nu = 1.0;
    while (std::sqrt(residual_sq(nu)) > 1e-6 * std::sqrt(double(n)) && nu < 1e9) {
      nu *= 2.0;
    }
    out.nu_gen = nu;
    out.xi_gen = std::sqrt(residual_sq(nu));
    return out;
  }
  out.nu_gen = minimize_convex_ray(residual_sq, 0.0, 1.0, 1e-10, 1e9);
  out.xi_gen = std::sqrt(residual_sq(out.nu_gen));
  return out;
}

double w_hat_norm(double sigma, const GaussianPair& pair, const OracleSample& sample) {
  if (!sample.overwhelming) {
    throw DivergenceError("w_hat_norm: sample is not in the overwhelming regime");
  }
  double r_sq =
      (pair.h.array() + sample.nu_hat - sample.lambda_hat.array()).matrix().squaredNorm();
  double denom = pair.g.squaredNorm() - r_sq;
  if (denom <= 0.0) {
    throw DivergenceError("w_hat_norm: nonpositive denominator");
  }
  return sigma * std::sqrt(r_sq / denom);
}

double xi_d_objective(double d, double sigma, const GaussianPair& pair,
                      const Eigen::VectorXd& x_tilde, bool signed_model,
                      double grad_tol) {
  if (d < 0.0) throw std::invalid_argument("xi_d_objective: d must be >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  check_x_tilde(pair, x_tilde);
  if (d == 0.0) {
    // The residual term vanishes and every paid lambda goes to zero.
    return sigma * pair.g.norm();
  }
  DualSpec spec;
  spec.h = &pair.h;
  spec.x_tilde = &x_tilde;
  spec.g_norm_sq = pair.g.squaredNorm();
  spec.g_norm = std::sqrt(spec.g_norm_sq);
  spec.signed_model = signed_model;
  spec.sqrt_form = false;
  spec.sigma = sigma;
  spec.d = d;

  double nu0;
  Eigen::VectorXd lambda0;
  initial_point(spec, nu0, lambda0);
  // The inner maximization has a closed-form reduction per nu and the outer
  // profile is concave, so the exact 1-D search alone resolves the optimum
  // well past any useful grad_tol; no iterative ascent is needed here.
  (void)grad_tol;
  InnerSolution exact = polish(spec, nu0);
  return exact.value;
}

}  // namespace lassokit
