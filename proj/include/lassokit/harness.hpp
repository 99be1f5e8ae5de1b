#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lassokit/scalar_theory.hpp"
#include "lassokit/solvers.hpp"

namespace lassokit {

// Thrown by run_experiment when more than 10% of trials fail (a failed trial
// is one where any requested algorithm diverged or did not converge).
class ExperimentFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { constrained, penalized, socp, oracle };

// Stable lower-case names used in configs, CLI flags, and exported files.
const char* algorithm_name(Algorithm algorithm);
std::optional<Algorithm> algorithm_from_name(const std::string& name);

// Monte Carlo experiment description.  alpha and beta are ratios of the
// system size n: the instance uses m = round(alpha*n) equations and
// k = round(beta*n) nonzero coordinates (round half to even).  Theory
// columns always use the realized ratios m/n and k/n.
struct ExperimentConfig {
  int n = 400;
  double alpha = 0.5;
  double beta = 0.135;
  double sigma = 1.0;
  double magnitude = 0.0;  // nonzero amplitude; 0 selects the default 1000/sqrt(n)
  int trials = 20;
  std::uint64_t master_seed = 1;
  bool signed_model = false;
  std::vector<Algorithm> algorithms{Algorithm::constrained};
  int threads = 0;  // 0 selects the hardware concurrency

  int m() const;
  int k() const;
  double realized_alpha() const;
  double realized_beta() const;
  double effective_magnitude() const;

  // Enforces m >= 1, k < m, k >= 0, trials >= 1, sigma >= 0, n >= 1, and a
  // non-empty algorithm list; throws std::invalid_argument otherwise.
  void validate() const;
};

// Parses an ExperimentConfig from a JSON object with keys matching the field
// names (n, alpha, beta, sigma, magnitude, trials, master_seed, signed,
// algorithms, threads); unknown keys are rejected.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);

// Aggregate statistics for one algorithm across the completed trials of an
// experiment.  `zeta` columns hold per-sqrt(n) scaled residual values: the
// terminal residual norm / sqrt(n) for constrained and socp, the shifted
// penalized objective / sqrt(n) for penalized, and the oracle optimum value
// / sqrt(n) for oracle.  Standard deviations use the N-1 normalization and
// are 0 when fewer than two trials completed.
struct AlgorithmStats {
  Algorithm algorithm = Algorithm::constrained;
  int completed = 0;
  int failed = 0;
  double mean_w_norm = 0.0;
  double std_w_norm = 0.0;
  double mean_zeta = 0.0;
  double std_zeta = 0.0;
  // Mean of the oracle's inner scalar maximizer; NaN for the other
  // algorithms.
  double mean_nu_hat = 0.0;
};

// Result of one experiment: per-algorithm statistics plus the theoretical
// prediction at the realized ratios.  theory_zeta and theory_rho carry the
// sigma scaling and are absent above the recovery threshold.
struct TrialSummary {
  ExperimentConfig config;
  double realized_alpha = 0.0;
  double realized_beta = 0.0;
  bool below_threshold = false;
  double theory_nu = 0.0;  // +infinity when beta == 0
  std::optional<double> theory_zeta;
  std::optional<double> theory_rho;
  std::vector<AlgorithmStats> stats;
  double wall_seconds = 0.0;  // informational; never serialized
};

// Builds the trial's random instance deterministically from
// (config.master_seed, trial_index): matrix entries are drawn column by
// column, then the noise vector.  The signal is zero on the first n-k
// coordinates and +magnitude on the last k; y = A*x_tilde + v.
ProblemInstance generate_instance(const ExperimentConfig& config, int trial_index);

// Runs all trials (work pool; deterministic reduction ordered by trial
// index), aggregates per-algorithm statistics excluding failed solves, and
// attaches the theory columns.  Penalty and residual-budget calibrations are
// computed once from the realized ratios; AboveThresholdError propagates if
// penalized or socp is requested above threshold.  Throws ExperimentFailure
// when more than 10% of trials fail.
TrialSummary run_experiment(const ExperimentConfig& config);

// Reruns the benchmark grid `which` in {1: unsigned rho=2, 2: unsigned
// rho=3, 3: signed rho=2, 4: signed rho=3} with constrained and penalized
// solvers at 3 (alpha, beta) settings per grid.  `scale` in (0, 1] shrinks
// the runs for desk-scale use: n_scaled = max(200, round(scale * n_full)),
// trials_scaled = max(20, round(scale * 100)).
std::vector<TrialSummary> reproduce_table(int which, double scale);

enum class ExportFormat { csv, json };

// Serializes summaries (one row per algorithm) and contour curves.  CSV uses
// the fixed header
//   alpha,beta,n,trials,algorithm,mean_w_norm,std_w_norm,mean_zeta,std_zeta,
//   theory_nu,theory_zeta,theory_rho,seed
// with floats printed to 17 significant digits, "unbounded" for an infinite
// theory_nu, empty cells for above-threshold theory columns, and curves
// appended as commented two-column sections.  JSON mirrors the same schema
// (null for absent values).  I/O failures raise std::runtime_error naming
// the path.
void export_results(const std::vector<TrialSummary>& summaries,
                    const std::vector<ContourCurve>& curves, const std::string& path,
                    ExportFormat format);

}  // namespace lassokit
