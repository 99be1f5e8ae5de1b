#include "lassokit/solvers.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "lassokit/rng.hpp"

namespace lassokit {

namespace {

// Largest eigenvalue of A^T A (squared-loss gradient Lipschitz constant) by
// power iteration: 20 rounds with a 1e-6 relative stop, inflated 2% so the
// estimate stays a safe step-size bound.
double lipschitz_bound(const Eigen::MatrixXd& A, std::uint64_t seed) {
  const int n = static_cast<int>(A.cols());
  SplitMix64 rng(seed ^ 0x517CC1B727220A95ULL);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.uniform_open01() - 0.5;
  double norm = z.norm();
  if (norm == 0.0) z.setOnes();
  z.normalize();
  double eig = 0.0;
  Eigen::VectorXd w, back;
  for (int iter = 0; iter < 20; ++iter) {
    w.noalias() = A * z;
    double next = w.squaredNorm();
    back.noalias() = A.transpose() * w;
    double back_norm = back.norm();
    if (back_norm <= 0.0) break;
    z = back / back_norm;
    if (std::fabs(next - eig) <= 1e-6 * std::max(next, 1e-30)) {
      eig = next;
      break;
    }
    eig = next;
  }
  return 1.02 * std::max(eig, 1e-12);
}

// Soft threshold / one-sided shrink used as the proximity step of the
// penalized solver.
void shrink(Eigen::VectorXd& u, double threshold, bool signed_model) {
  if (signed_model) {
    u = (u.array() - threshold).cwiseMax(0.0).matrix();
  } else {
    u = (u.array().sign() * (u.array().abs() - threshold).cwiseMax(0.0)).matrix();
  }
}

struct EngineResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  double kkt = 0.0;  // unit-step projected/proximal gradient displacement norm
};

// Accelerated (FISTA-type) iteration with monotone restart shared by the
// constrained and penalized solvers.  `step(u, tau)` maps u = z - tau*grad(z)
// to the next iterate (exact projection, or shrink with threshold scaled by
// tau); `Extra` is the nonsmooth part of the composite objective (0 for the
// constrained solver).  Stationarity is the step-size-independent unit-step
// fixed-point displacement ‖x - step(x - grad(x), 1)‖.  Stops when that
// reaches `map_tol`, on a relative composite-objective decrease ≤ 1e-12 over
// a 50-iteration window, or on the absolute residual floor (noiseless
// corner).
template <class Step, class Extra>
EngineResult composite_descent(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                               Step&& step, Extra&& extra, Eigen::VectorXd x0,
                               double L, int max_iterations, double map_tol,
                               double window_rel) {
  auto smooth = [&](const Eigen::VectorXd& x) { return 0.5 * (y - A * x).squaredNorm(); };

  EngineResult out;
  Eigen::VectorXd x = step(std::move(x0), 0.0);  // feasibility / pattern normalization
  Eigen::VectorXd z = x;
  double t = 1.0;
  double fx = smooth(x) + extra(x);
  const double floor = 0.5 * 1e-20 * std::max(y.squaredNorm(), 1.0);
  const int window = 50;
  std::vector<double> history;
  history.reserve(std::min(max_iterations, 1 << 16) + 1);
  history.push_back(fx);

  Eigen::VectorXd grad(A.cols()), x_new;
  double best_displacement = std::numeric_limits<double>::infinity();
  int stalled_checks = 0;
  int iter = 0;
  while (iter < max_iterations) {
    ++iter;
    // Objective values carry additive rounding noise ~1e-13 * |f|; treating
    // that noise as an increase would stall the iteration long before the
    // displacement target, so all monotonicity checks get this allowance.
    const double eval_noise = 1e-13 * (1.0 + std::fabs(fx));
    grad.noalias() = A.transpose() * (A * z - y);
    x_new = step(z - grad / L, 1.0 / L);
    double f_new = smooth(x_new) + extra(x_new);
    if (f_new > fx + eval_noise) {
      // Momentum overshoot: restart from the last monotone iterate.
      grad.noalias() = A.transpose() * (A * x - y);
      x_new = step(x - grad / L, 1.0 / L);
      f_new = smooth(x_new) + extra(x_new);
      t = 1.0;
      int backoffs = 0;
      while (f_new > fx + eval_noise && backoffs++ < 8) {
        L *= 1.5;  // Lipschitz estimate was low
        x_new = step(x - grad / L, 1.0 / L);
        f_new = smooth(x_new) + extra(x_new);
      }
      if (f_new > fx + eval_noise) {
        out.converged = true;  // no descent available at machine precision
        break;
      }
    }
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = x_new + ((t - 1.0) / t_next) * (x_new - x);
    t = t_next;
    x = x_new;
    fx = f_new;
    history.push_back(fx);

    bool check_now = (iter % 25 == 0) || iter == max_iterations;
    if (!check_now && window_rel > 0.0 && iter > window) {
      double old = history[iter - window];
      check_now = (old - fx) <= window_rel * std::max(fx, 1e-300);
    }
    if (fx <= floor) {
      out.converged = true;
      break;
    }
    if (check_now) {
      grad.noalias() = A.transpose() * (A * x - y);
      double displacement = (x - step(x - grad, 1.0)).norm();
      if (displacement <= map_tol) {
        out.converged = true;
        break;
      }
      if (window_rel > 0.0) {
        if (iter > window && (history[iter - window] - fx) <= window_rel * std::max(fx, 1e-300)) {
          out.converged = true;
          break;
        }
      } else {
        if (displacement < best_displacement * (1.0 - 1e-3)) {
          best_displacement = displacement;
          stalled_checks = 0;
        } else if (++stalled_checks >= 40) {
          break;  // numerical floor above map_tol; caller decides what's next
        }
      }
    }
  }
  grad.noalias() = A.transpose() * (A * x - y);
  out.kkt = (x - step(x - grad, 1.0)).norm();
  out.iterations = iter;
  out.x = std::move(x);
  return out;
}

Eigen::VectorXd initial_iterate(const SolveOptions& options, int n) {
  if (options.warm_start && options.warm_start->size() == n) return *options.warm_start;
  return Eigen::VectorXd::Zero(n);
}

// Core of the penalized solver, reused by the SOCP bisection: alternating
// scalarization of the non-squared residual.  Returns the iterate, the
// terminal residual norm, and bookkeeping.
struct PenalizedCore {
  Eigen::VectorXd x;
  double residual = 0.0;
  int iterations = 0;
  bool fixed_point = false;
  bool degenerate = false;
};

PenalizedCore penalized_core(const ProblemInstance& inst, double lambda, bool signed_model,
                             double L, Eigen::VectorXd x0, const SolveOptions& options,
                             double map_tol_scale) {
  PenalizedCore core;
  core.x = std::move(x0);
  const double y_norm = inst.y.norm();
  double r = (inst.y - inst.A * core.x).norm();
  if (r <= 0.0) r = std::max(y_norm, 1.0);

  // The update r -> residual(lambda * r) is a 1-D fixed-point iteration; its
  // contraction factor approaches 1 near critical penalty levels, where plain
  // iteration would crawl.  Keep the previous (input, output) pair and do a
  // guarded secant extrapolation toward the fixed point.
  double r_prev = std::numeric_limits<double>::quiet_NaN();
  double g_prev = std::numeric_limits<double>::quiet_NaN();

  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    double mu = lambda * r;
    // Unit-step displacement bounds the coordinatewise subgradient violation
    // from above, so this tolerance keeps the final inclusion error (scaled
    // by 1/r) well inside the declared tolerance.
    double map_tol = std::max(map_tol_scale * (1.0 + lambda) * r, 1e-13 * (1.0 + y_norm));
    int budget = options.max_iterations - core.iterations;
    if (budget <= 0) break;
    EngineResult inner = composite_descent(
        inst.A, inst.y,
        [&](Eigen::VectorXd u, double tau) {
          shrink(u, mu * tau, signed_model);
          return u;
        },
        [&](const Eigen::VectorXd& x) { return mu * x.lpNorm<1>(); }, std::move(core.x), L,
        budget, map_tol, 0.0);
    core.x = std::move(inner.x);
    core.iterations += inner.iterations;
    double r_new = (inst.y - inst.A * core.x).norm();
    if (r_new < 1e-12 * y_norm) {
      core.residual = r_new;
      core.degenerate = true;
      return core;
    }
    // Inner inexactness makes successive residuals wobble in a band
    // proportional to map_tol, so demanding more resolution than that would
    // spin forever; the polish rounds in solve_penalized_lasso tighten
    // map_tol when the declared inclusion tolerance needs a narrower band.
    if (std::fabs(r_new - r) <= std::max(options.outer_tolerance * (1.0 + r_new), 20.0 * map_tol)) {
      core.residual = r_new;
      core.fixed_point = true;
      return core;
    }
    double r_next = r_new;
    if (std::isfinite(r_prev) && std::fabs(r - r_prev) > 10.0 * map_tol) {
      double slope = (r_new - g_prev) / (r - r_prev);
      // The residual map is piecewise smooth and evaluated inexactly, so cap
      // the extrapolation gain and reject slopes outside the stable range.
      if (slope > -0.5 && slope < 0.995) {
        double extrapolated = r + (r_new - r) / (1.0 - slope);
        double lo_guard = 0.2 * std::min(r, r_new);
        double hi_guard = 5.0 * std::max(r, r_new);
        if (extrapolated > lo_guard && extrapolated < hi_guard) r_next = extrapolated;
      }
    }
    r_prev = r;
    g_prev = r_new;
    r = r_next;
  }
  core.residual = (inst.y - inst.A * core.x).norm();
  return core;
}

// Subgradient-inclusion distance (max norm) of ||y - Ax|| + lambda ||x||_1 at x.
double penalized_kkt(const ProblemInstance& inst, const Eigen::VectorXd& x, double lambda,
                     bool signed_model, double residual) {
  if (residual <= 0.0) return 0.0;
  Eigen::VectorXd s = inst.A.transpose() * (inst.y - inst.A * x) / residual;
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double violation;
    if (signed_model) {
      violation = x(i) > 0.0 ? std::fabs(s(i) - lambda) : std::max(s(i) - lambda, 0.0);
    } else {
      violation = x(i) != 0.0 ? std::fabs(s(i) - lambda * (x(i) > 0.0 ? 1.0 : -1.0))
                              : std::max(std::fabs(s(i)) - lambda, 0.0);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

void finalize_report(const ProblemInstance& inst, SolveReport& report) {
  report.w_norm = (report.x_hat - inst.x_tilde).norm();
  report.zeta = (inst.y - inst.A * report.x_hat).norm();
}

}  // namespace

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& x, double radius) {
  if (radius < 0.0) throw std::invalid_argument("project_l1_ball: radius must be >= 0");
  if (x.lpNorm<1>() <= radius) return x;
  if (radius == 0.0) return Eigen::VectorXd::Zero(x.size());
  std::vector<double> magnitudes(x.size());
  for (int i = 0; i < x.size(); ++i) magnitudes[i] = std::fabs(x(i));
  std::stable_sort(magnitudes.begin(), magnitudes.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t s = 1; s <= magnitudes.size(); ++s) {
    cumulative += magnitudes[s - 1];
    double candidate = (cumulative - radius) / static_cast<double>(s);
    if (candidate < magnitudes[s - 1]) {
      theta = candidate;
    } else {
      break;
    }
  }
  Eigen::VectorXd out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    double magnitude = std::fabs(x(i)) - theta;
    out(i) = magnitude > 0.0 ? (x(i) > 0.0 ? magnitude : -magnitude) : 0.0;
  }
  return out;
}

Eigen::VectorXd project_l1_ball_nonneg(const Eigen::VectorXd& x, double radius) {
  if (radius < 0.0) throw std::invalid_argument("project_l1_ball_nonneg: radius must be >= 0");
  Eigen::VectorXd clamped = x.cwiseMax(0.0);
  if (clamped.sum() <= radius) return clamped;
  if (radius == 0.0) return Eigen::VectorXd::Zero(x.size());
  std::vector<double> values(clamped.data(), clamped.data() + clamped.size());
  std::stable_sort(values.begin(), values.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t s = 1; s <= values.size(); ++s) {
    cumulative += values[s - 1];
    double candidate = (cumulative - radius) / static_cast<double>(s);
    if (candidate < values[s - 1]) {
      theta = candidate;
    } else {
      break;
    }
  }
  return (clamped.array() - theta).cwiseMax(0.0).matrix();
}

SolveReport solve_constrained_lasso(const ProblemInstance& inst, double radius,
                                    bool signed_model, const SolveOptions& options) {
  if (!(radius > 0.0)) throw std::invalid_argument("solve_constrained_lasso: radius must be > 0");
  double L = lipschitz_bound(inst.A, inst.seed);
  auto project = [&](Eigen::VectorXd u, double) {
    return signed_model ? project_l1_ball_nonneg(u, radius) : project_l1_ball(u, radius);
  };
  EngineResult engine = composite_descent(
      inst.A, inst.y, project, [](const Eigen::VectorXd&) { return 0.0; },
      initial_iterate(options, inst.n()), L, options.max_iterations, options.kkt_tolerance,
      1e-12);

  SolveReport report;
  report.x_hat = std::move(engine.x);
  report.iterations = engine.iterations;
  report.kkt_residual = engine.kkt;
  report.converged = engine.converged || engine.kkt <= options.kkt_tolerance;
  finalize_report(inst, report);
  report.objective = report.zeta;
  return report;
}

SolveReport solve_penalized_lasso(const ProblemInstance& inst, double lambda_lasso,
                                  bool signed_model, const SolveOptions& options) {
  if (!(lambda_lasso > 0.0)) {
    throw std::invalid_argument("solve_penalized_lasso: lambda must be > 0");
  }
  double L = lipschitz_bound(inst.A, inst.seed);
  double map_tol_scale = 0.1 * options.subgradient_tolerance_scale;
  PenalizedCore core = penalized_core(inst, lambda_lasso, signed_model, L,
                                      initial_iterate(options, inst.n()), options, map_tol_scale);
  double declared = options.subgradient_tolerance_scale * (1.0 + lambda_lasso);
  double kkt = penalized_kkt(inst, core.x, lambda_lasso, signed_model, core.residual);
  // The scalarization leaves a residual-mismatch term ~ lambda * |last
  // residual move| / residual in the inclusion error; when lambda is large
  // enough for that to breach the declared tolerance, rerun the alternation
  // warm-started at a tighter inner tolerance.
  SolveOptions polish = options;
  for (int round = 0; round < 3 && !core.degenerate && kkt > declared; ++round) {
    polish.max_iterations = options.max_iterations - core.iterations;
    if (polish.max_iterations <= 0) break;
    map_tol_scale *= 0.1;
    PenalizedCore refined = penalized_core(inst, lambda_lasso, signed_model, L,
                                           std::move(core.x), polish, map_tol_scale);
    refined.iterations += core.iterations;
    core = std::move(refined);
    kkt = penalized_kkt(inst, core.x, lambda_lasso, signed_model, core.residual);
  }

  SolveReport report;
  report.x_hat = std::move(core.x);
  report.iterations = core.iterations;
  report.degenerate_residual = core.degenerate;
  finalize_report(inst, report);
  report.objective = report.zeta + lambda_lasso * report.x_hat.lpNorm<1>() -
                     lambda_lasso * inst.x_tilde.lpNorm<1>();
  report.kkt_residual = kkt;
  // The inclusion distance is a complete first-order certificate for the
  // convex objective on its own; the outer settle flag is only an internal
  // stop and may stay unset at floor-clamped tolerances.
  report.converged = core.degenerate || report.kkt_residual <= declared;
  return report;
}

SolveReport solve_socp(const ProblemInstance& inst, double r_socp, bool signed_model,
                       const SolveOptions& options) {
  if (!(r_socp > 0.0)) throw std::invalid_argument("solve_socp: r_socp must be > 0");
  const double y_norm = inst.y.norm();
  SolveReport report;
  if (y_norm <= r_socp) {
    // Zero is feasible and l1-minimal; the constraint is slack or tight at 0.
    report.x_hat = Eigen::VectorXd::Zero(inst.n());
    finalize_report(inst, report);
    report.objective = 0.0;
    report.converged = true;
    report.kkt_residual = 0.0;
    report.iterations = 0;
    return report;
  }

  double L = lipschitz_bound(inst.A, inst.seed);
  // Penalty levels are residual-monotone; above lambda_hi the solution is 0.
  double lambda_hi = (inst.A.transpose() * inst.y).lpNorm<Eigen::Infinity>() / y_norm * 1.000001;
  Eigen::VectorXd x = initial_iterate(options, inst.n());
  double warm_residual = (inst.y - inst.A * x).norm();
  int iterations = 0;

  auto residual_at = [&](double lambda, double map_scale) {
    // Zero residual is a fixed point of the residual scalarization at every
    // penalty level (the effective quadratic-form penalty vanishes), so a
    // near-interpolating warm iterate can pin the alternation there even when
    // the true residual at this penalty is large.  Restart such iterates from
    // x = 0: from the high-residual side the alternation descends to the
    // largest fixed point, which is the true one.
    if (warm_residual < 0.2 * r_socp) x.setZero();
    PenalizedCore core = penalized_core(inst, lambda, signed_model, L, std::move(x), options,
                                        map_scale);
    x = std::move(core.x);
    warm_residual = core.residual;
    iterations += core.iterations;
    return core.residual;
  };

  // Warm-started evaluations lag their starting iterate when the penalty
  // jump is large, which biases the reported residual toward the start and
  // can poison the bracket.  Keep every evaluation adjacent to the previous
  // one: a 5% geometric walk-down at coarse accuracy to straddle the target,
  // then staged refinement, each stage re-verifying its bracket ends at that
  // stage's accuracy (walking out if the cruder stage misplaced them) before
  // bisecting.  The second, narrow stage runs only when the first misses the
  // match window: residual evaluations reproduce only to a noise floor
  // proportional to the inner tolerance, so the floor is lowered exactly
  // where (and if) the certification needs it.
  const double coarse_scale = 1e-3;

  double lambda = lambda_hi;
  double res = y_norm;
  bool straddled = false;
  for (int step = 0; step < 400; ++step) {
    lambda *= 0.95;
    res = residual_at(lambda, coarse_scale);
    if (res < r_socp) {
      straddled = true;
      break;
    }
  }
  if (!straddled) {
    throw InfeasibleError("solve_socp: residual stays above r_socp even at vanishing penalty");
  }

  const double stage_scale[2] = {1e-2 * options.subgradient_tolerance_scale,
                                 1e-4 * options.subgradient_tolerance_scale};
  const double stage_walk[2] = {0.95, 1.0 - 3e-4};
  double lo = lambda, hi = lambda / 0.95;
  bool matched = false;
  for (int stage = 0; stage < 2 && !matched; ++stage) {
    const double scale = stage_scale[stage];
    const double walk = stage_walk[stage];
    if (stage > 0) {
      lo = lambda * walk;
      hi = lambda / walk;
    }
    double res_lo = residual_at(lo, scale);
    bool hi_certified = false;
    for (int step = 0; res_lo >= r_socp && step < 200; ++step) {
      hi = lo;
      hi_certified = true;  // value at this stage's accuracy at or above target
      lo *= walk;
      res_lo = residual_at(lo, scale);
    }
    if (res_lo >= r_socp) {
      throw InfeasibleError("solve_socp: residual stays above r_socp even at vanishing penalty");
    }
    if (!hi_certified) {
      // Ascending evaluations bias the residual low if anything, so the first
      // value at or above the target certifies the upper end.
      double res_hi = residual_at(hi, scale);
      for (int step = 0; res_hi < r_socp && step < 200; ++step) {
        lo = hi;
        res_lo = res_hi;
        hi /= walk;
        res_hi = residual_at(hi, scale);
      }
    }
    lambda = lo;
    res = res_lo;
    matched = std::fabs(res - r_socp) <= options.residual_match_rel * r_socp;
    for (int iter = 0; iter < options.max_bisection_iterations && !matched; ++iter) {
      double mid = 0.5 * (lo + hi);
      res = residual_at(mid, scale);
      lambda = mid;
      if (std::fabs(res - r_socp) <= options.residual_match_rel * r_socp) {
        matched = true;
        break;
      }
      if (res > r_socp) hi = mid; else lo = mid;
      if (hi - lo <= 1e-15 * hi) break;  // penalty resolution exhausted
    }
  }

  report.x_hat = std::move(x);
  report.iterations = iterations;
  finalize_report(inst, report);
  report.objective = report.x_hat.lpNorm<1>();
  report.kkt_residual = std::fabs(report.zeta - r_socp) / r_socp;
  report.converged = report.kkt_residual <= options.residual_match_rel;
  return report;
}

double lambda_from_theory(const PhaseParams& params) {
  params.validate();
  if (params.beta == 0.0) {
    throw std::invalid_argument("lambda_from_theory: beta == 0 has no finite penalty level");
  }
  TheoryPoint point = characterize(params);
  if (!point.below_threshold) {
    throw AboveThresholdError("lambda_from_theory: phase point is not below threshold");
  }
  return point.nu_star;
}

double r_socp_from_theory(const PhaseParams& params, double sigma, int n) {
  params.validate();
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  TheoryPoint point = characterize(params);
  if (!point.below_threshold) {
    throw AboveThresholdError("r_socp_from_theory: phase point is not below threshold");
  }
  return sigma * (*point.zeta_over_sqrt_n) * std::sqrt(static_cast<double>(n));
}

}  // namespace lassokit
