#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lassokit/gaussian_oracle.hpp"
#include "lassokit/harness.hpp"
#include "lassokit/rng.hpp"
#include "lassokit/scalar_theory.hpp"
#include "lassokit/solvers.hpp"

namespace {

std::string fmt(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

std::vector<double> parse_grid(const std::string& text) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0) {
    throw std::invalid_argument("grid must have the form lo:hi:step with step > 0, got '" +
                                text + "'");
  }
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    double alpha = lo + i * step;
    if (alpha > hi + 0.5 * step) break;
    grid.push_back(alpha);
  }
  return grid;
}

int round_count(double ratio, int n) { return static_cast<int>(std::nearbyint(ratio * n)); }

void write_curve_csv(std::ostream& out, const lassokit::ContourCurve& curve) {
  out << "alpha,beta\n";
  char buffer[64];
  for (const auto& [alpha, beta] : curve.points) {
    std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g\n", alpha, beta);
    out << buffer;
  }
  for (double alpha : curve.skipped_alphas) {
    std::snprintf(buffer, sizeof(buffer), "# skipped_alpha=%.17g\n", alpha);
    out << buffer;
  }
}

int cmd_theory(double alpha, double beta, bool signed_model, double sigma, bool as_json) {
  lassokit::PhaseParams params{alpha, beta, signed_model};
  params.validate();
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  lassokit::TheoryPoint point = lassokit::characterize(params);

  if (as_json) {
    nlohmann::json doc;
    doc["alpha"] = alpha;
    doc["beta"] = beta;
    doc["signed"] = signed_model;
    doc["sigma"] = sigma;
    doc["alpha_w"] = point.alpha_w;
    if (std::isinf(point.nu_star)) {
      doc["nu"] = "unbounded";
    } else {
      doc["nu"] = point.nu_star;
    }
    doc["below_threshold"] = point.below_threshold;
    doc["rho"] = point.rho ? nlohmann::json(sigma * *point.rho) : nlohmann::json(nullptr);
    doc["zeta"] = point.zeta_over_sqrt_n ? nlohmann::json(sigma * *point.zeta_over_sqrt_n)
                                         : nlohmann::json(nullptr);
    std::cout << doc.dump(2) << '\n';
    return 0;
  }

  std::cout << "alpha    " << fmt(alpha) << '\n';
  std::cout << "beta     " << fmt(beta) << '\n';
  std::cout << "model    " << (signed_model ? "signed" : "unsigned") << '\n';
  std::cout << "alpha_w  " << fmt(point.alpha_w) << '\n';
  if (std::isinf(point.nu_star)) {
    std::cout << "nu       unbounded\n";
  } else {
    std::cout << "nu       " << fmt(point.nu_star) << '\n';
  }
  if (!point.below_threshold) {
    std::cout << "above threshold: error diverges\n";
    return 0;
  }
  std::cout << "rho      " << fmt(sigma * *point.rho) << '\n';
  std::cout << "zeta     " << fmt(sigma * *point.zeta_over_sqrt_n) << '\n';
  return 0;
}

int cmd_curve(double rho, bool signed_model, const std::string& grid_text,
              const std::string& out_path, bool as_json) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  std::vector<double> grid = parse_grid(grid_text);
  lassokit::ContourCurve curve = lassokit::contour_curve(rho, signed_model, grid);

  std::ostringstream body;
  if (as_json) {
    nlohmann::json doc;
    doc["rho"] = curve.rho;
    doc["signed"] = curve.signed_model;
    doc["points"] = nlohmann::json::array();
    for (const auto& [alpha, beta] : curve.points) {
      doc["points"].push_back(nlohmann::json::array({alpha, beta}));
    }
    doc["skipped_alphas"] = curve.skipped_alphas;
    body << doc.dump(2) << '\n';
  } else {
    write_curve_csv(body, curve);
  }

  if (out_path.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << body.str();
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + out_path);
  }
  return 0;
}

int cmd_oracle(int n, double alpha, double beta, int seeds, std::uint64_t master_seed,
               bool signed_model, bool generic, double sigma, double magnitude, bool as_json) {
  if (n < 10) throw std::invalid_argument("n must be >= 10");
  if (seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  const int m = round_count(alpha, n);
  const int k = round_count(beta, n);
  if (m < 1 || m > n) throw std::invalid_argument("round(alpha*n) must lie in [1, n]");
  if (k < 0 || k >= m) throw std::invalid_argument("round(beta*n) must lie in [0, round(alpha*n))");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double amplitude = magnitude > 0.0 ? magnitude : 1000.0 / sqrt_n;

  Eigen::VectorXd x_tilde = Eigen::VectorXd::Zero(n);
  x_tilde.tail(k).setConstant(amplitude);

  nlohmann::json rows = nlohmann::json::array();
  double sum_xi = 0.0, sum_nu = 0.0, sum_w = 0.0;
  int ok = 0, with_w = 0;
  if (!as_json) {
    std::printf("%6s  %14s  %10s  %12s\n", "seed", "xi/sqrt(n)", "nu_hat", "w_hat_norm");
  }
  for (int s = 0; s < seeds; ++s) {
    std::uint64_t seed = lassokit::mix_seed(master_seed, static_cast<std::uint64_t>(s));
    lassokit::GaussianPair pair = lassokit::sample_pair(m, n, seed);
    nlohmann::json row;
    row["seed_index"] = s;
    try {
      double xi_scaled = 0.0, nu_hat = 0.0;
      std::optional<double> w_norm;
      if (generic) {
        // xi_gen is the minimized clamp residual norm, a pure (g, h)
        // functional; no sigma scaling applies.
        lassokit::GenericResult result = lassokit::xi_ov_generic(pair, k, signed_model);
        xi_scaled = result.xi_gen / sqrt_n;
        nu_hat = result.nu_gen;
      } else {
        lassokit::OracleSample sample =
            signed_model ? lassokit::xi_ov_signed_general(sigma, pair, x_tilde)
                         : lassokit::xi_ov_general(sigma, pair, x_tilde);
        xi_scaled = sample.xi_ov / sqrt_n;
        nu_hat = sample.nu_hat;
        if (sample.overwhelming) w_norm = sample.w_hat_norm;
      }
      ++ok;
      sum_xi += xi_scaled;
      sum_nu += nu_hat;
      if (w_norm) {
        ++with_w;
        sum_w += *w_norm;
      }
      if (as_json) {
        row["xi_over_sqrt_n"] = xi_scaled;
        row["nu_hat"] = nu_hat;
        row["w_hat_norm"] = w_norm ? nlohmann::json(*w_norm) : nlohmann::json(nullptr);
        rows.push_back(row);
      } else {
        std::printf("%6d  %14s  %10s  %12s\n", s, fmt(xi_scaled).c_str(), fmt(nu_hat).c_str(),
                    w_norm ? fmt(*w_norm).c_str() : "-");
      }
    } catch (const lassokit::DivergenceError&) {
      if (as_json) {
        row["diverged"] = true;
        rows.push_back(row);
      } else {
        std::printf("%6d  %14s\n", s, "diverged");
      }
    }
  }

  if (as_json) {
    nlohmann::json doc;
    doc["n"] = n;
    doc["m"] = m;
    doc["k"] = k;
    doc["signed"] = signed_model;
    doc["generic"] = generic;
    doc["seeds"] = rows;
    nlohmann::json agg;
    agg["count"] = ok;
    agg["mean_xi_over_sqrt_n"] = ok > 0 ? nlohmann::json(sum_xi / ok) : nlohmann::json(nullptr);
    agg["mean_nu_hat"] = ok > 0 ? nlohmann::json(sum_nu / ok) : nlohmann::json(nullptr);
    agg["mean_w_hat_norm"] =
        with_w > 0 ? nlohmann::json(sum_w / with_w) : nlohmann::json(nullptr);
    doc["aggregate"] = agg;
    std::cout << doc.dump(2) << '\n';
  } else if (ok > 0) {
    std::printf("%6s  %14s  %10s  %12s\n", "mean", fmt(sum_xi / ok).c_str(),
                fmt(sum_nu / ok).c_str(), with_w > 0 ? fmt(sum_w / with_w).c_str() : "-");
  }
  return 0;
}

void print_summary_text(const lassokit::TrialSummary& summary) {
  std::printf("alpha=%s beta=%s n=%d trials=%d%s\n", fmt(summary.realized_alpha).c_str(),
              fmt(summary.realized_beta).c_str(), summary.config.n, summary.config.trials,
              summary.config.signed_model ? " signed" : "");
  if (summary.below_threshold) {
    std::printf("theory: nu=%s zeta=%s rho=%s\n",
                std::isinf(summary.theory_nu) ? "unbounded" : fmt(summary.theory_nu).c_str(),
                fmt(*summary.theory_zeta).c_str(), fmt(*summary.theory_rho).c_str());
  } else {
    std::printf("theory: nu=%s above threshold: error diverges\n",
                fmt(summary.theory_nu).c_str());
  }
  std::printf("%-12s %6s %6s %12s %12s %12s %12s\n", "algorithm", "ok", "fail", "mean_w",
              "std_w", "mean_zeta", "std_zeta");
  for (const lassokit::AlgorithmStats& stats : summary.stats) {
    std::printf("%-12s %6d %6d %12s %12s %12s %12s\n", lassokit::algorithm_name(stats.algorithm),
                stats.completed, stats.failed, fmt(stats.mean_w_norm).c_str(),
                fmt(stats.std_w_norm).c_str(), fmt(stats.mean_zeta).c_str(),
                fmt(stats.std_zeta).c_str());
    if (stats.algorithm == lassokit::Algorithm::oracle && stats.completed > 0) {
      std::printf("%-12s %27s mean_nu_hat=%s\n", "", "", fmt(stats.mean_nu_hat).c_str());
    }
  }
  std::printf("wall time: %.1f s\n", summary.wall_seconds);
}

nlohmann::json summary_to_json(const lassokit::TrialSummary& summary) {
  nlohmann::json doc;
  doc["alpha"] = summary.realized_alpha;
  doc["beta"] = summary.realized_beta;
  doc["n"] = summary.config.n;
  doc["trials"] = summary.config.trials;
  doc["signed"] = summary.config.signed_model;
  doc["seed"] = summary.config.master_seed;
  doc["below_threshold"] = summary.below_threshold;
  if (std::isinf(summary.theory_nu)) {
    doc["theory_nu"] = "unbounded";
  } else {
    doc["theory_nu"] = summary.theory_nu;
  }
  doc["theory_zeta"] =
      summary.theory_zeta ? nlohmann::json(*summary.theory_zeta) : nlohmann::json(nullptr);
  doc["theory_rho"] =
      summary.theory_rho ? nlohmann::json(*summary.theory_rho) : nlohmann::json(nullptr);
  doc["algorithms"] = nlohmann::json::array();
  for (const lassokit::AlgorithmStats& stats : summary.stats) {
    nlohmann::json entry;
    entry["algorithm"] = lassokit::algorithm_name(stats.algorithm);
    entry["completed"] = stats.completed;
    entry["failed"] = stats.failed;
    entry["mean_w_norm"] = stats.mean_w_norm;
    entry["std_w_norm"] = stats.std_w_norm;
    entry["mean_zeta"] = stats.mean_zeta;
    entry["std_zeta"] = stats.std_zeta;
    if (stats.algorithm == lassokit::Algorithm::oracle) {
      entry["mean_nu_hat"] = stats.mean_nu_hat;
    }
    doc["algorithms"].push_back(entry);
  }
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LASSO recovery toolkit: error theory, dual oracles, solvers, experiments"};
  app.require_subcommand(1);

  // theory
  auto* theory = app.add_subcommand("theory", "Evaluate the exact error characterization");
  double t_alpha = 0.5, t_beta = 0.1, t_sigma = 1.0;
  bool t_signed = false, t_json = false;
  theory->add_option("--alpha", t_alpha, "Measurement ratio m/n")->required();
  theory->add_option("--beta", t_beta, "Sparsity ratio k/n")->required();
  theory->add_option("--sigma", t_sigma, "Noise standard deviation");
  theory->add_flag("--signed", t_signed, "Nonnegative signal model");
  theory->add_flag("--json", t_json, "JSON output");

  // curve
  auto* curve = app.add_subcommand("curve", "Phase-transition contour for a target error norm");
  double c_rho = 2.0;
  bool c_signed = false, c_json = false;
  std::string c_grid = "0.01:0.99:0.01", c_out;
  curve->add_option("--rho", c_rho, "Target worst-case error norm")->required();
  curve->add_option("--grid", c_grid, "Alpha grid lo:hi:step");
  curve->add_option("--out", c_out, "Output path (default: stdout)");
  curve->add_flag("--signed", c_signed, "Nonnegative signal model");
  curve->add_flag("--json", c_json, "JSON output");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Sample the dual Gaussian optimization");
  int o_n = 100, o_seeds = 1;
  double o_alpha = 0.5, o_beta = 0.1, o_sigma = 1.0, o_magnitude = 0.0;
  std::uint64_t o_seed = 1;
  bool o_signed = false, o_generic = false, o_json = false;
  oracle->add_option("--n", o_n, "Signal dimension (>= 10)")->required();
  oracle->add_option("--alpha", o_alpha, "Measurement ratio m/n")->required();
  oracle->add_option("--beta", o_beta, "Sparsity ratio k/n")->required();
  oracle->add_option("--seeds", o_seeds, "Number of independent samples");
  oracle->add_option("--seed", o_seed, "Master seed");
  oracle->add_option("--sigma", o_sigma, "Noise standard deviation");
  oracle->add_option("--magnitude", o_magnitude, "Nonzero amplitude (default 1000/sqrt(n))");
  oracle->add_flag("--signed", o_signed, "Nonnegative signal model");
  oracle->add_flag("--generic", o_generic, "Large-amplitude closed-form variant");
  oracle->add_flag("--json", o_json, "JSON output");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo recovery experiment");
  std::string s_config, s_out, s_format = "csv";
  int s_n = 0, s_trials = 0, s_threads = -1;
  double s_alpha = 0.0, s_beta = 0.0, s_sigma = -1.0, s_magnitude = -1.0;
  std::uint64_t s_seed = 0;
  bool s_signed = false, s_json = false;
  std::vector<std::string> s_algorithms;
  simulate->add_option("--config", s_config, "JSON config file");
  auto* opt_n = simulate->add_option("--n", s_n, "Signal dimension");
  auto* opt_alpha = simulate->add_option("--alpha", s_alpha, "Measurement ratio m/n");
  auto* opt_beta = simulate->add_option("--beta", s_beta, "Sparsity ratio k/n");
  auto* opt_sigma = simulate->add_option("--sigma", s_sigma, "Noise standard deviation");
  auto* opt_magnitude =
      simulate->add_option("--magnitude", s_magnitude, "Nonzero amplitude (0 = default)");
  auto* opt_trials = simulate->add_option("--trials", s_trials, "Trial count");
  auto* opt_seed = simulate->add_option("--seed", s_seed, "Master seed");
  auto* opt_signed = simulate->add_flag("--signed", s_signed, "Nonnegative signal model");
  auto* opt_algorithms =
      simulate->add_option("--algorithms", s_algorithms,
                           "Comma-separated subset of constrained,penalized,socp,oracle")
          ->delimiter(',');
  auto* opt_threads = simulate->add_option("--threads", s_threads, "Worker threads (0 = auto)");
  simulate->add_option("--out", s_out, "Results file path");
  simulate->add_option("--format", s_format, "Results file format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  simulate->add_flag("--json", s_json, "JSON summary on stdout");

  // table
  auto* table = app.add_subcommand("table", "Reproduce a benchmark grid");
  int b_which = 1;
  double b_scale = 0.2;
  std::string b_out;
  bool b_json = false;
  table->add_option("--which", b_which, "Grid index 1..4")->required();
  table->add_option("--scale", b_scale, "Size scale in (0, 1]");
  table->add_option("--out", b_out, "CSV output path");
  table->add_flag("--json", b_json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    int code = app.exit(error);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*theory) return cmd_theory(t_alpha, t_beta, t_signed, t_sigma, t_json);
    if (*curve) return cmd_curve(c_rho, c_signed, c_grid, c_out, c_json);
    if (*oracle) {
      return cmd_oracle(o_n, o_alpha, o_beta, o_seeds, o_seed, o_signed, o_generic, o_sigma,
                        o_magnitude, o_json);
    }
    if (*simulate) {
      lassokit::ExperimentConfig config;
      if (!s_config.empty()) config = lassokit::config_from_json_file(s_config);
      if (opt_n->count() > 0) config.n = s_n;
      if (opt_alpha->count() > 0) config.alpha = s_alpha;
      if (opt_beta->count() > 0) config.beta = s_beta;
      if (opt_sigma->count() > 0) config.sigma = s_sigma;
      if (opt_magnitude->count() > 0) config.magnitude = s_magnitude;
      if (opt_trials->count() > 0) config.trials = s_trials;
      if (opt_seed->count() > 0) config.master_seed = s_seed;
      if (opt_signed->count() > 0) config.signed_model = s_signed;
      if (opt_threads->count() > 0) config.threads = s_threads;
      if (opt_algorithms->count() > 0) {
        config.algorithms.clear();
        for (const std::string& name : s_algorithms) {
          auto algorithm = lassokit::algorithm_from_name(name);
          if (!algorithm) throw std::invalid_argument("unknown algorithm '" + name + "'");
          config.algorithms.push_back(*algorithm);
        }
      }
      config.validate();
      lassokit::TrialSummary summary = lassokit::run_experiment(config);
      if (s_json) {
        std::cout << summary_to_json(summary).dump(2) << '\n';
      } else {
        print_summary_text(summary);
      }
      if (!s_out.empty()) {
        lassokit::export_results({summary}, {}, s_out,
                                 s_format == "json" ? lassokit::ExportFormat::json
                                                    : lassokit::ExportFormat::csv);
      }
      return 0;
    }
    if (*table) {
      std::vector<lassokit::TrialSummary> summaries = lassokit::reproduce_table(b_which, b_scale);
      if (b_json) {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& summary : summaries) doc.push_back(summary_to_json(summary));
        std::cout << doc.dump(2) << '\n';
      } else {
        for (const auto& summary : summaries) {
          print_summary_text(summary);
          std::printf("\n");
        }
      }
      if (!b_out.empty()) {
        lassokit::export_results(summaries, {}, b_out, lassokit::ExportFormat::csv);
      }
      return 0;
    }
  } catch (const lassokit::ExperimentFailure& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 1;
  }
  return 0;
}
