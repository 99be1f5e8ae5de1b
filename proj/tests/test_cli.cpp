#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "json.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
  std::string command = std::string(LASSOKIT_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buffer[4096];
  std::size_t got;
  while ((got = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
    result.output.append(buffer, got);
  }
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

nlohmann::json run_json(const std::string& args) {
  RunResult result = run_cli(args);
  INFO("output: ", result.output);
  REQUIRE(result.exit_code == 0);
  return nlohmann::json::parse(result.output);
}

std::string read_file(const std::string& path) {
  std::ifstream stream(path);
  REQUIRE(stream.good());
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("theory subcommand reports the benchmark point") {
  nlohmann::json doc = run_json("theory --alpha 0.5 --beta 0.135 --json");
  CHECK(doc["below_threshold"] == true);
  CHECK(std::fabs(doc["rho"].get<double>() - 2.0) <= 0.004);
  CHECK(std::fabs(doc["zeta"].get<double>() - 0.3162) <= 0.0005);
  CHECK(std::fabs(doc["alpha_w"].get<double>() - 0.4) <= 0.001);
  CHECK(std::fabs(doc["nu"].get<double>() - 1.02257) <= 0.002);

  RunResult text = run_cli("theory --alpha 0.5 --beta 0.135");
  CHECK(text.exit_code == 0);
  CHECK(text.output.find("rho") != std::string::npos);
  CHECK(text.output.find("zeta") != std::string::npos);
}

TEST_CASE("theory subcommand signed model") {
  nlohmann::json doc = run_json("theory --alpha 0.3 --beta 0.10269 --signed --json");
  CHECK(std::fabs(doc["nu"].get<double>() - 0.89143) <= 0.009);
  CHECK(std::fabs(doc["rho"].get<double>() - 3.0) <= 0.01);
}

TEST_CASE("theory subcommand scales linearly with sigma") {
  nlohmann::json base = run_json("theory --alpha 0.5 --beta 0.135 --json");
  nlohmann::json scaled = run_json("theory --alpha 0.5 --beta 0.135 --sigma 2 --json");
  CHECK(scaled["rho"].get<double>() ==
        doctest::Approx(2.0 * base["rho"].get<double>()).epsilon(1e-12));
  CHECK(scaled["zeta"].get<double>() ==
        doctest::Approx(2.0 * base["zeta"].get<double>()).epsilon(1e-12));
  CHECK(scaled["nu"] == base["nu"]);  // penalty calibration carries no sigma
}

TEST_CASE("theory subcommand above threshold") {
  RunResult result = run_cli("theory --alpha 0.5 --beta 0.4");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("above threshold") != std::string::npos);
  nlohmann::json doc = run_json("theory --alpha 0.5 --beta 0.4 --json");
  CHECK(doc["rho"].is_null());
  CHECK(doc["zeta"].is_null());
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("theory --alpha 1.5 --beta 0.1").exit_code == 1);
  CHECK(run_cli("theory --beta 0.1").exit_code == 1);       // missing required flag
  CHECK(run_cli("theory --alpha 0.5 --beta 0.1 --bogus").exit_code == 1);
  CHECK(run_cli("frobnicate").exit_code == 1);
  CHECK(run_cli("").exit_code == 1);                        // a subcommand is required
  CHECK(run_cli("table --which 7").exit_code == 1);
  CHECK(run_cli("curve --rho -1").exit_code == 1);
  CHECK(run_cli("oracle --n 5 --alpha 0.5 --beta 0.1").exit_code == 1);
}

TEST_CASE("curve subcommand emits gnuplot-ready points") {
  RunResult result = run_cli("curve --rho 2 --grid 0.3:0.3:0.1");
  REQUIRE(result.exit_code == 0);
  std::istringstream lines(result.output);
  std::string header, row;
  REQUIRE(std::getline(lines, header));
  CHECK(header == "alpha,beta");
  REQUIRE(std::getline(lines, row));
  double alpha = 0.0, beta = 0.0;
  REQUIRE(std::sscanf(row.c_str(), "%lf,%lf", &alpha, &beta) == 2);
  CHECK(alpha == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::fabs(beta - 0.063) <= 0.0015);
}

TEST_CASE("curve subcommand json and file output agree") {
  nlohmann::json doc = run_json("curve --rho 3 --signed --grid 0.5:0.5:0.1 --json");
  REQUIRE(doc["points"].size() == 1);
  CHECK(std::fabs(doc["points"][0][1].get<double>() - 0.2336) <= 0.002);

  std::string path = "/tmp/lassokit_cli_curve.csv";
  RunResult result = run_cli("curve --rho 2 --grid 0.4:0.5:0.1 --out " + path);
  REQUIRE(result.exit_code == 0);
  std::string text = read_file(path);
  CHECK(text.rfind("alpha,beta\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + two grid points
  std::remove(path.c_str());
}

TEST_CASE("curve subcommand with an empty grid writes only the header") {
  RunResult result = run_cli("curve --rho 2 --grid 0.5:0.4:0.1");
  REQUIRE(result.exit_code == 0);
  CHECK(result.output == "alpha,beta\n");
}

TEST_CASE("oracle subcommand is deterministic under a fixed seed") {
  std::string args = "oracle --n 100 --alpha 0.5 --beta 0.1 --seeds 2 --seed 1 --json";
  RunResult first = run_cli(args);
  RunResult second = run_cli(args);
  REQUIRE(first.exit_code == 0);
  CHECK(first.output == second.output);
  nlohmann::json doc = nlohmann::json::parse(first.output);
  CHECK(doc["aggregate"]["count"].get<int>() >= 1);
  CHECK(doc["m"] == 50);
  CHECK(doc["k"] == 10);
}

TEST_CASE("oracle subcommand generic variant matches the scalar calibration") {
  nlohmann::json doc =
      run_json("oracle --n 2000 --alpha 0.5 --beta 0.135 --generic --seeds 1 --json");
  double nu = doc["aggregate"]["mean_nu_hat"].get<double>();
  CHECK(std::fabs(nu - 1.0227) <= 0.03 * 1.0227);
}

TEST_CASE("simulate subcommand runs and serializes deterministically") {
  std::string args =
      "simulate --n 150 --alpha 0.5 --beta 0.1 --trials 2 --seed 3 "
      "--algorithms constrained --threads 1 --json";
  RunResult first = run_cli(args);
  RunResult second = run_cli(args);
  REQUIRE(first.exit_code == 0);
  CHECK(first.output == second.output);
  nlohmann::json doc = nlohmann::json::parse(first.output);
  REQUIRE(doc["algorithms"].size() == 1);
  CHECK(doc["algorithms"][0]["completed"] == 2);
  CHECK(doc["algorithms"][0]["failed"] == 0);
  CHECK(std::isfinite(doc["algorithms"][0]["mean_w_norm"].get<double>()));
  CHECK(doc["seed"] == 3);
}

TEST_CASE("simulate subcommand writes result files in both formats") {
  std::string csv_path = "/tmp/lassokit_cli_sim.csv";
  std::string json_path = "/tmp/lassokit_cli_sim.json";
  std::string base =
      "simulate --n 120 --alpha 0.5 --beta 0.1 --trials 1 --seed 9 "
      "--algorithms constrained --threads 1 ";
  REQUIRE(run_cli(base + "--out " + csv_path).exit_code == 0);
  std::string csv = read_file(csv_path);
  CHECK(csv.rfind("alpha,beta,n,trials,algorithm,", 0) == 0);
  CHECK(csv.find("constrained") != std::string::npos);

  REQUIRE(run_cli(base + "--format json --out " + json_path).exit_code == 0);
  nlohmann::json doc = nlohmann::json::parse(read_file(json_path));
  REQUIRE(doc["results"].size() == 1);
  CHECK(doc["results"][0]["n"] == 120);
  std::remove(csv_path.c_str());
  std::remove(json_path.c_str());
}

TEST_CASE("simulate subcommand merges config files with flag overrides") {
  std::string config_path = "/tmp/lassokit_cli_config.json";
  {
    std::ofstream out(config_path);
    out << R"({"n": 120, "alpha": 0.5, "beta": 0.1, "trials": 5, "master_seed": 11,
               "algorithms": ["constrained"], "threads": 1})";
  }
  nlohmann::json doc = run_json("simulate --config " + config_path + " --trials 1 --json");
  CHECK(doc["trials"] == 1);   // flag wins over file
  CHECK(doc["seed"] == 11);    // file value survives
  CHECK(doc["n"] == 120);
  std::remove(config_path.c_str());

  CHECK(run_cli("simulate --config /nonexistent/config.json").exit_code == 1);
}

TEST_CASE("simulate subcommand distinguishes failure exit codes") {
  // above-threshold penalty calibration is a usage-level error
  CHECK(run_cli("simulate --n 100 --alpha 0.5 --beta 0.4 --trials 1 "
                "--algorithms penalized --threads 1")
            .exit_code == 1);
  // an experiment whose trials all diverge trips the failure threshold
  CHECK(run_cli("simulate --n 60 --alpha 0.5 --beta 0.45 --trials 2 "
                "--algorithms oracle --threads 1")
            .exit_code == 2);
}
