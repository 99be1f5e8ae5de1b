#include "lassokit/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "lassokit/gaussian_oracle.hpp"
#include "lassokit/rng.hpp"

namespace lassokit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kOracleStreamTag = 0xF;
constexpr std::uint64_t kTableSeedBase = 0xA5C0FFEEULL;

// One algorithm's outcome in one trial; absent values mean the solve failed.
struct TrialCell {
  double w = kNaN;
  double zeta = kNaN;    // per-sqrt(n) scaled, see AlgorithmStats
  double nu_hat = kNaN;  // oracle only
  bool failed = true;
};

std::string format_g17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::constrained: return "constrained";
    case Algorithm::penalized: return "penalized";
    case Algorithm::socp: return "socp";
    case Algorithm::oracle: return "oracle";
  }
  return "unknown";
}

std::optional<Algorithm> algorithm_from_name(const std::string& name) {
  if (name == "constrained") return Algorithm::constrained;
  if (name == "penalized") return Algorithm::penalized;
  if (name == "socp") return Algorithm::socp;
  if (name == "oracle") return Algorithm::oracle;
  return std::nullopt;
}

int ExperimentConfig::m() const { return static_cast<int>(std::nearbyint(alpha * n)); }

int ExperimentConfig::k() const { return static_cast<int>(std::nearbyint(beta * n)); }

double ExperimentConfig::realized_alpha() const { return static_cast<double>(m()) / n; }

double ExperimentConfig::realized_beta() const { return static_cast<double>(k()) / n; }

double ExperimentConfig::effective_magnitude() const {
  return magnitude > 0.0 ? magnitude : 1000.0 / std::sqrt(static_cast<double>(n));
}

void ExperimentConfig::validate() const {
  if (n < 1) throw std::invalid_argument("config: n must be >= 1");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("config: sigma must be >= 0");
  if (magnitude < 0.0) throw std::invalid_argument("config: magnitude must be >= 0");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  if (algorithms.empty()) throw std::invalid_argument("config: algorithm list is empty");
  if (m() < 1) throw std::invalid_argument("config: round(alpha*n) must be >= 1");
  if (k() < 0) throw std::invalid_argument("config: round(beta*n) must be >= 0");
  if (k() >= m()) throw std::invalid_argument("config: round(beta*n) must be < round(alpha*n)");
  PhaseParams realized{realized_alpha(), realized_beta(), signed_model};
  realized.validate();
}

namespace {

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top-level JSON must be an object");
  ExperimentConfig config;
  config.algorithms.clear();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const nlohmann::json& value = it.value();
    if (key == "n") {
      config.n = value.get<int>();
    } else if (key == "alpha") {
      config.alpha = value.get<double>();
    } else if (key == "beta") {
      config.beta = value.get<double>();
    } else if (key == "sigma") {
      config.sigma = value.get<double>();
    } else if (key == "magnitude") {
      config.magnitude = value.get<double>();
    } else if (key == "trials") {
      config.trials = value.get<int>();
    } else if (key == "master_seed") {
      config.master_seed = value.get<std::uint64_t>();
    } else if (key == "signed") {
      config.signed_model = value.get<bool>();
    } else if (key == "threads") {
      config.threads = value.get<int>();
    } else if (key == "algorithms") {
      if (!value.is_array()) throw std::invalid_argument("config: algorithms must be an array");
      for (const auto& entry : value) {
        auto algorithm = algorithm_from_name(entry.get<std::string>());
        if (!algorithm) {
          throw std::invalid_argument("config: unknown algorithm '" +
                                      entry.get<std::string>() + "'");
        }
        config.algorithms.push_back(*algorithm);
      }
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (config.algorithms.empty()) config.algorithms = {Algorithm::constrained};
  config.validate();
  return config;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& error) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + error.what());
  }
  return config_from_json(j);
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw std::runtime_error("config: cannot read " + path);
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return config_from_json_text(buffer.str());
}

ProblemInstance generate_instance(const ExperimentConfig& config, int trial_index) {
  config.validate();
  if (trial_index < 0) throw std::invalid_argument("trial_index must be >= 0");
  const int m = config.m();
  const int n = config.n;
  const int k = config.k();

  ProblemInstance inst;
  inst.seed = mix_seed(config.master_seed, static_cast<std::uint64_t>(trial_index));
  GaussianStream stream(inst.seed);
  inst.A.resize(m, n);
  double* data = inst.A.data();  // column-major draw order
  for (Eigen::Index i = 0; i < inst.A.size(); ++i) data[i] = stream.next();
  inst.v.resize(m);
  for (int i = 0; i < m; ++i) inst.v(i) = config.sigma * stream.next();
  inst.x_tilde = Eigen::VectorXd::Zero(n);
  inst.x_tilde.tail(k).setConstant(config.effective_magnitude());
  inst.y = inst.A * inst.x_tilde + inst.v;
  inst.sigma = config.sigma;
  return inst;
}

TrialSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const double sqrt_n = std::sqrt(static_cast<double>(config.n));
  const PhaseParams realized{config.realized_alpha(), config.realized_beta(),
                             config.signed_model};
  const TheoryPoint theory = characterize(realized);

  // Calibrations shared by every trial; throws before any trial runs if a
  // requested algorithm is not defined at this phase point.
  double lambda_pen = 0.0;
  double r_budget = 0.0;
  for (Algorithm algorithm : config.algorithms) {
    if (algorithm == Algorithm::penalized) lambda_pen = lambda_from_theory(realized);
    if (algorithm == Algorithm::socp) {
      r_budget = r_socp_from_theory(realized, config.sigma, config.n);
    }
  }

  const int algorithm_count = static_cast<int>(config.algorithms.size());
  std::vector<std::vector<TrialCell>> cells(
      config.trials, std::vector<TrialCell>(algorithm_count));

  std::atomic<int> next_trial{0};
  std::mutex fatal_mutex;
  std::string fatal_message;
  std::atomic<bool> fatal{false};

  auto run_trial = [&](int trial) {
    ProblemInstance inst = generate_instance(config, trial);
    const double radius = inst.x_tilde.lpNorm<1>();
    for (int ai = 0; ai < algorithm_count; ++ai) {
      TrialCell& cell = cells[trial][ai];
      try {
        switch (config.algorithms[ai]) {
          case Algorithm::constrained: {
            if (radius == 0.0) {  // empty signal: the feasible set is {0}
              cell.w = 0.0;
              cell.zeta = inst.y.norm() / sqrt_n;
              cell.failed = false;
              break;
            }
            SolveReport report = solve_constrained_lasso(inst, radius, config.signed_model);
            cell.w = report.w_norm;
            cell.zeta = report.zeta / sqrt_n;
            cell.failed = !report.converged;
            break;
          }
          case Algorithm::penalized: {
            SolveReport report = solve_penalized_lasso(inst, lambda_pen, config.signed_model);
            cell.w = report.w_norm;
            cell.zeta = report.objective / sqrt_n;
            cell.failed = !report.converged;
            break;
          }
          case Algorithm::socp: {
            SolveReport report = solve_socp(inst, r_budget, config.signed_model);
            cell.w = report.w_norm;
            cell.zeta = report.zeta / sqrt_n;
            cell.failed = !report.converged;
            break;
          }
          case Algorithm::oracle: {
            GaussianPair pair =
                sample_pair(config.m(), config.n, mix_seed(inst.seed, kOracleStreamTag));
            OracleSample sample = config.signed_model
                                      ? xi_ov_signed_general(config.sigma, pair, inst.x_tilde)
                                      : xi_ov_general(config.sigma, pair, inst.x_tilde);
            cell.zeta = sample.xi_ov / sqrt_n;
            cell.nu_hat = sample.nu_hat;
            if (sample.overwhelming) {
              cell.w = sample.w_hat_norm;
              cell.failed = false;
            }
            break;
          }
        }
      } catch (const DivergenceError&) {
        cell.failed = true;
      } catch (const InfeasibleError&) {
        cell.failed = true;
      }
    }
  };

  auto worker = [&]() {
    for (;;) {
      int trial = next_trial.fetch_add(1);
      if (trial >= config.trials || fatal.load()) break;
      try {
        run_trial(trial);
      } catch (const std::exception& error) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        fatal_message = error.what();
        fatal.store(true);
        break;
      }
    }
  };

  int thread_count = config.threads > 0
                         ? config.threads
                         : std::max(1u, std::thread::hardware_concurrency());
  thread_count = std::min(thread_count, config.trials);
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  if (fatal.load()) throw std::runtime_error("run_experiment: " + fatal_message);

  TrialSummary summary;
  summary.config = config;
  summary.realized_alpha = realized.alpha;
  summary.realized_beta = realized.beta;
  summary.below_threshold = theory.below_threshold;
  summary.theory_nu = theory.nu_star;
  if (theory.below_threshold) {
    summary.theory_zeta = config.sigma * *theory.zeta_over_sqrt_n;
    summary.theory_rho = config.sigma * *theory.rho;
  }

  int failed_trials = 0;
  for (int trial = 0; trial < config.trials; ++trial) {
    bool any_failed = false;
    for (int ai = 0; ai < algorithm_count; ++ai) any_failed |= cells[trial][ai].failed;
    failed_trials += any_failed ? 1 : 0;
  }

  summary.stats.resize(algorithm_count);
  for (int ai = 0; ai < algorithm_count; ++ai) {
    AlgorithmStats& stats = summary.stats[ai];
    stats.algorithm = config.algorithms[ai];
    double sum_w = 0.0, sum_z = 0.0, sum_nu = 0.0;
    for (int trial = 0; trial < config.trials; ++trial) {
      const TrialCell& cell = cells[trial][ai];
      if (cell.failed) {
        ++stats.failed;
        continue;
      }
      ++stats.completed;
      sum_w += cell.w;
      sum_z += cell.zeta;
      sum_nu += std::isnan(cell.nu_hat) ? 0.0 : cell.nu_hat;
    }
    if (stats.completed > 0) {
      stats.mean_w_norm = sum_w / stats.completed;
      stats.mean_zeta = sum_z / stats.completed;
      stats.mean_nu_hat = stats.algorithm == Algorithm::oracle
                              ? sum_nu / stats.completed
                              : kNaN;
      double ss_w = 0.0, ss_z = 0.0;
      for (int trial = 0; trial < config.trials; ++trial) {
        const TrialCell& cell = cells[trial][ai];
        if (cell.failed) continue;
        ss_w += (cell.w - stats.mean_w_norm) * (cell.w - stats.mean_w_norm);
        ss_z += (cell.zeta - stats.mean_zeta) * (cell.zeta - stats.mean_zeta);
      }
      if (stats.completed > 1) {
        stats.std_w_norm = std::sqrt(ss_w / (stats.completed - 1));
        stats.std_zeta = std::sqrt(ss_z / (stats.completed - 1));
      }
    } else {
      stats.mean_w_norm = stats.mean_zeta = stats.mean_nu_hat = kNaN;
    }
  }

  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (10 * failed_trials > config.trials) {
    throw ExperimentFailure("run_experiment: " + std::to_string(failed_trials) + " of " +
                            std::to_string(config.trials) + " trials failed (over 10%)");
  }
  return summary;
}

std::vector<TrialSummary> reproduce_table(int which, double scale) {
  if (which < 1 || which > 4) throw std::invalid_argument("reproduce_table: which must be 1..4");
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw std::invalid_argument("reproduce_table: scale must lie in (0, 1]");
  }
  struct RowSpec {
    double alpha;
    double beta_over_alpha;
    int n_full;
  };
  static const RowSpec kRows[4][3] = {
      {{0.3, 0.21, 2000}, {0.5, 0.27, 2000}, {0.7, 0.33, 2000}},     // unsigned, rho = 2
      {{0.3, 0.249, 3000}, {0.5, 0.325, 2000}, {0.7, 0.41, 2000}},   // unsigned, rho = 3
      {{0.3, 0.286, 2000}, {0.5, 0.3842, 2000}, {0.7, 0.4849, 1500}},  // signed, rho = 2
      {{0.3, 0.3423, 2000}, {0.5, 0.4672, 2000}, {0.7, 0.5971, 1500}}  // signed, rho = 3
  };
  const bool signed_model = which >= 3;

  std::vector<TrialSummary> summaries;
  summaries.reserve(3);
  for (int row = 0; row < 3; ++row) {
    const RowSpec& spec = kRows[which - 1][row];
    ExperimentConfig config;
    config.n = std::max(200, static_cast<int>(std::lround(scale * spec.n_full)));
    config.alpha = spec.alpha;
    config.beta = spec.alpha * spec.beta_over_alpha;
    config.sigma = 1.0;
    config.magnitude = 0.0;
    config.trials = std::max(20, static_cast<int>(std::lround(scale * 100.0)));
    config.master_seed =
        mix_seed(kTableSeedBase, static_cast<std::uint64_t>(which * 16 + row));
    config.signed_model = signed_model;
    config.algorithms = {Algorithm::constrained, Algorithm::penalized};
    summaries.push_back(run_experiment(config));
  }
  return summaries;
}

namespace {

nlohmann::json summary_row_json(const TrialSummary& summary, const AlgorithmStats& stats) {
  nlohmann::json row;
  row["alpha"] = summary.realized_alpha;
  row["beta"] = summary.realized_beta;
  row["n"] = summary.config.n;
  row["trials"] = summary.config.trials;
  row["algorithm"] = algorithm_name(stats.algorithm);
  row["mean_w_norm"] = stats.mean_w_norm;
  row["std_w_norm"] = stats.std_w_norm;
  row["mean_zeta"] = stats.mean_zeta;
  row["std_zeta"] = stats.std_zeta;
  if (std::isinf(summary.theory_nu)) {
    row["theory_nu"] = "unbounded";
  } else {
    row["theory_nu"] = summary.theory_nu;
  }
  row["theory_zeta"] =
      summary.theory_zeta ? nlohmann::json(*summary.theory_zeta) : nlohmann::json(nullptr);
  row["theory_rho"] =
      summary.theory_rho ? nlohmann::json(*summary.theory_rho) : nlohmann::json(nullptr);
  row["seed"] = summary.config.master_seed;
  return row;
}

}  // namespace

void export_results(const std::vector<TrialSummary>& summaries,
                    const std::vector<ContourCurve>& curves, const std::string& path,
                    ExportFormat format) {
  std::ofstream stream(path);
  if (!stream) throw std::runtime_error("export_results: cannot open " + path);

  if (format == ExportFormat::csv) {
    stream << "alpha,beta,n,trials,algorithm,mean_w_norm,std_w_norm,mean_zeta,std_zeta,"
              "theory_nu,theory_zeta,theory_rho,seed\n";
    for (const TrialSummary& summary : summaries) {
      for (const AlgorithmStats& stats : summary.stats) {
        stream << format_g17(summary.realized_alpha) << ',' << format_g17(summary.realized_beta)
               << ',' << summary.config.n << ',' << summary.config.trials << ','
               << algorithm_name(stats.algorithm) << ',' << format_g17(stats.mean_w_norm) << ','
               << format_g17(stats.std_w_norm) << ',' << format_g17(stats.mean_zeta) << ','
               << format_g17(stats.std_zeta) << ',';
        if (std::isinf(summary.theory_nu)) {
          stream << "unbounded";
        } else {
          stream << format_g17(summary.theory_nu);
        }
        stream << ',';
        if (summary.theory_zeta) stream << format_g17(*summary.theory_zeta);
        stream << ',';
        if (summary.theory_rho) stream << format_g17(*summary.theory_rho);
        stream << ',' << summary.config.master_seed << '\n';
      }
    }
    for (const ContourCurve& curve : curves) {
      stream << "# contour rho=" << format_g17(curve.rho)
             << " signed=" << (curve.signed_model ? 1 : 0) << '\n';
      stream << "# alpha,beta\n";
      for (const auto& [alpha, beta] : curve.points) {
        stream << format_g17(alpha) << ',' << format_g17(beta) << '\n';
      }
      for (double alpha : curve.skipped_alphas) {
        stream << "# skipped_alpha=" << format_g17(alpha) << '\n';
      }
    }
  } else {
    nlohmann::json doc;
    doc["results"] = nlohmann::json::array();
    for (const TrialSummary& summary : summaries) {
      for (const AlgorithmStats& stats : summary.stats) {
        doc["results"].push_back(summary_row_json(summary, stats));
      }
    }
    doc["curves"] = nlohmann::json::array();
    for (const ContourCurve& curve : curves) {
      nlohmann::json entry;
      entry["rho"] = curve.rho;
      entry["signed"] = curve.signed_model;
      entry["points"] = nlohmann::json::array();
      for (const auto& [alpha, beta] : curve.points) {
        entry["points"].push_back(nlohmann::json::array({alpha, beta}));
      }
      entry["skipped_alphas"] = curve.skipped_alphas;
      doc["curves"].push_back(entry);
    }
    stream << doc.dump(2) << '\n';
  }

  stream.flush();
  if (!stream) throw std::runtime_error("export_results: write failed for " + path);
}

}  // namespace lassokit
