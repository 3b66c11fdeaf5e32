#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "grdr/config.hpp"
#include "grdr/matrix_io.hpp"
#include "grdr/runner.hpp"
#include "grdr/schedule.hpp"

using namespace grdr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "grdr_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path path = temp_dir() / name;
  std::ofstream os(path);
  os << text;
  return path;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("config file parsing with comments and overrides") {
  const fs::path path = write_file("basic.cfg",
                                   "# experiment\n"
                                   "cov.family = eigendecay\n"
                                   "cov.gamma = -3\n"
                                   "dims = 4, 8\n"
                                   "replications = 500\n"
                                   "seed = 7\n");
  ExperimentConfig cfg = ExperimentConfig::from_file(path.string());
  CHECK(cfg.cov_gamma == -3.0);
  CHECK(cfg.dims == std::vector<int>{4, 8});
  CHECK(cfg.replications == 500);
  cfg.set("cov.gamma", "-2.5");
  CHECK(cfg.cov_gamma == -2.5);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config errors carry the field path") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(cfg.set("no.such.key", "1"), ConfigError);
  try {
    cfg.set("replications", "many");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "replications");
    CHECK(std::string(e.what()).find("replications") != std::string::npos);
  }

  cfg.dims = {16, 8};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.dims = {8, 16};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("referenced files must exist and parse before running") {
  ExperimentConfig cfg;
  cfg.cov_family = "file";
  cfg.cov_file = (temp_dir() / "missing_matrix.txt").string();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // A corrupted (non-monotone) q file is a named validation failure.
  const fs::path bad_q = write_file("bad_q.txt", "1.0\n0.5\n0.6\n");
  ExperimentConfig cfg2;
  cfg2.q_kind = bad_q.string();
  cfg2.dims = {3};
  cfg2.replications = 10;
  CHECK_NOTHROW(cfg2.validate());  // file exists and parses as numbers
  bool named = false;
  try {
    run_estimate(cfg2);
  } catch (const ScheduleError& e) {
    named = std::string(e.what()).find("nonincreasing") != std::string::npos;
  }
  CHECK(named);
}

TEST_CASE("run_estimate: constant payoff rows are exact") {
  ExperimentConfig cfg;
  cfg.payoff_kind = "constant";
  cfg.payoff_constant = 2.25;
  cfg.dims = {4};
  cfg.replications = 50;
  cfg.q_kind = "harmonic";
  const EstimateOutput out = run_estimate(cfg);
  std::istringstream csv(out.csv);
  std::string line;
  std::getline(csv, line);  // header
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.find(",2.25,0,0,") != std::string::npos);  // estimate, se, var
  }
  CHECK(rows == 2);
  CHECK(out.numerical_failures.empty());
}

TEST_CASE("run_estimate is byte-identical across repeated runs") {
  ExperimentConfig cfg;
  cfg.cov_family = "eigendecay";
  cfg.cov_gamma = -2.0;
  cfg.dims = {4, 8};
  cfg.replications = 400;
  cfg.seed = 99;
  const EstimateOutput a = run_estimate(cfg);
  const EstimateOutput b = run_estimate(cfg);
  CHECK(a.csv == b.csv);
  CHECK(a.efficiency_json_per_dim == b.efficiency_json_per_dim);

  // Thread count changes scheduling only, never output bytes.
  cfg.threads = 2;
  const EstimateOutput c = run_estimate(cfg);
  CHECK(a.csv == c.csv);
}

TEST_CASE("run_estimate cost match keeps op counts within 5 percent") {
  ExperimentConfig cfg;
  cfg.dims = {8, 16};
  cfg.replications = 300;
  cfg.seed = 5;
  const EstimateOutput out = run_estimate(cfg);
  std::istringstream csv(out.csv);
  std::string header, mc_line, grdr_line;
  std::getline(csv, header);
  while (std::getline(csv, mc_line) && std::getline(csv, grdr_line)) {
    const auto field = [](const std::string& line, int idx) {
      std::istringstream ls(line);
      std::string item;
      for (int i = 0; i <= idx; ++i) std::getline(ls, item, ',');
      return item;
    };
    // columns: ... R=5, ... mean_ops=9
    const double mc_total =
        std::stod(field(mc_line, 9)) * std::stod(field(mc_line, 5));
    const double grdr_total =
        std::stod(field(grdr_line, 9)) * std::stod(field(grdr_line, 5));
    CHECK(std::abs(mc_total - grdr_total) <= 0.05 * grdr_total);
  }
}

TEST_CASE("run_bounds emits the pinned schemas") {
  ExperimentConfig cfg;
  cfg.dims = {4};
  cfg.replications = 10;
  cfg.payoff_linear = "ones";
  const BoundsOutput out = run_bounds(cfg);
  CHECK(out.bounds_csv.find("d,kappa,kappa_provenance,sigma_bound") == 0);
  REQUIRE(out.curve_csv_per_dim.count(4) == 1);
  const std::string& curve = out.curve_csv_per_dim.at(4);
  CHECK(curve.find("i,c_hat,stderr,lemma41_bound") == 0);
  // d+1 data lines follow the header.
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 6);
}

TEST_CASE("run_bounds: factor-q bound value for the d = 4 i^-2 spectrum") {
  ExperimentConfig cfg;
  cfg.cov_gamma = -2.0;
  cfg.dims = {4};
  cfg.replications = 10;
  cfg.payoff_linear = "ones";
  cfg.kappa = "1";
  const BoundsOutput out = run_bounds(cfg);
  // (2/4)(1 + 1/2 + 1/3 + 1/4)^2 = 625/288 = 2.1701...
  CHECK(out.bounds_csv.find("2.170138888888888") != std::string::npos);
  CHECK(out.bounds_csv.find(",supplied,") != std::string::npos);
}

TEST_CASE("matrix and q files round-trip through the runner") {
  const CovarianceSpec spec =
      make_eigen_decay(5, -1.1, 1.3, Orientation::kRandomRotation, 21);
  const fs::path matrix_path = temp_dir() / "cov5.txt";
  write_matrix_file(matrix_path.string(), spec.entries, "round trip");
  ExperimentConfig cfg;
  cfg.cov_family = "file";
  cfg.cov_file = matrix_path.string();
  cfg.dims = {5};
  cfg.replications = 50;
  cfg.q_kind = "harmonic";
  CHECK_NOTHROW(cfg.validate());
  const EstimateOutput out = run_estimate(cfg);
  CHECK(out.numerical_failures.empty());

  const Eigen::MatrixXd back = read_matrix_file(matrix_path.string());
  CHECK(back == spec.entries);
}

TEST_CASE("q files drive the runner end to end") {
  const QSchedule h = harmonic_schedule(6);
  const fs::path q_path = temp_dir() / "good_q.txt";
  write_vector_file(q_path.string(), h.q);
  ExperimentConfig cfg;
  cfg.q_kind = q_path.string();
  cfg.dims = {6};
  cfg.replications = 200;
  CHECK_NOTHROW(cfg.validate());
  const EstimateOutput out = run_estimate(cfg);
  CHECK(out.numerical_failures.empty());
  CHECK(out.csv.find("file:") != std::string::npos);
}

TEST_CASE("n_override changes the chain length and is recorded") {
  ExperimentConfig cfg;
  cfg.dims = {4};
  cfg.replications = 200;
  cfg.q_kind = "harmonic";
  cfg.n_override = 7;
  const EstimateOutput out = run_estimate(cfg);
  CHECK(out.csv.find("harmonic;n=7") != std::string::npos);
  // A longer chain draws depths 6 times per replication.
  ExperimentConfig plain = cfg;
  plain.n_override = 0;
  const ProblemInstance p = build_problem(cfg, 4);
  CHECK(p.schedule.n_iterations == 7);
  CHECK(build_problem(plain, 4).schedule.n_iterations == 2);
}

TEST_CASE("pca-permute-check verifies sorted PCA columns") {
  ExperimentConfig cfg;
  cfg.factor_kind = "pca-permute-check";
  cfg.dims = {8};
  cfg.replications = 100;
  const EstimateOutput out = run_estimate(cfg);
  CHECK(out.numerical_failures.empty());
  CHECK(out.csv.find("permuted-pca") != std::string::npos);
}

TEST_CASE("an indefinite sweep point aborts the row, not the sweep") {
  Eigen::MatrixXd bad(3, 3);
  bad << 1, 0.9, 0.9, 0.9, 1, -0.9, 0.9, -0.9, 1;  // indefinite
  const fs::path path = temp_dir() / "indefinite.txt";
  write_matrix_file(path.string(), bad);
  ExperimentConfig cfg;
  cfg.cov_family = "file";
  cfg.cov_file = path.string();
  cfg.dims = {3};
  cfg.replications = 100;
  const EstimateOutput out = run_estimate(cfg);
  CHECK(out.numerical_failures.size() == 1);
  CHECK(out.csv.find("grdr,") == std::string::npos);  // no data row emitted
}

TEST_CASE("work-normalized efficiency ratio grows with d for gamma = -3") {
  ExperimentConfig cfg;
  cfg.cov_gamma = -3.0;
  cfg.dims = {8, 64};
  cfg.replications = 2000;
  cfg.seed = 3;
  const EstimateOutput out = run_estimate(cfg);
  REQUIRE(out.efficiency_json_per_dim.size() == 2);
  const auto ratio_of = [&](int d) {
    const std::string& json = out.efficiency_json_per_dim.at(d);
    const auto key = json.find("work_normalized_ratio");
    const auto colon = json.find(':', key);
    return std::stod(json.substr(colon + 1));
  };
  CHECK(ratio_of(64) > ratio_of(8));
}

TEST_CASE("selftest battery passes, and the verdict is seed-robust") {
  std::ostringstream log;
  CHECK(run_selftest(log) == 0);
  CHECK(log.str().find("[FAIL]") == std::string::npos);
  for (const std::uint64_t seed : {1ull, 987654321ull, 5555ull}) {
    std::ostringstream other;
    CHECK(run_selftest(other, seed) == 0);
  }
}

#ifdef GRDR_BINARY
TEST_CASE("cli: identical config and seed give byte-identical outputs") {
  const fs::path dir1 = temp_dir() / "cli_run1";
  const fs::path dir2 = temp_dir() / "cli_run2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const std::string base = std::string(GRDR_BINARY) +
                           " estimate --dims 4,8 --replications 300"
                           " --seed 11 --q harmonic --out_dir ";
  CHECK(std::system((base + dir1.string() + " > /dev/null").c_str()) == 0);
  CHECK(std::system((base + dir2.string() + " > /dev/null").c_str()) == 0);
  const std::string csv1 = read_file(dir1 / "grdr_estimate.csv");
  const std::string csv2 = read_file(dir2 / "grdr_estimate.csv");
  CHECK(!csv1.empty());
  CHECK(csv1 == csv2);
}

TEST_CASE("cli: invalid configuration exits with code 1") {
  const int status = std::system(
      (std::string(GRDR_BINARY) + " estimate --cov.family nosuch 2>/dev/null")
          .c_str());
  CHECK(WEXITSTATUS(status) == 1);
}

TEST_CASE("cli: selftest subcommand exits cleanly") {
  const int status =
      std::system((std::string(GRDR_BINARY) + " selftest > /dev/null").c_str());
  CHECK(WEXITSTATUS(status) == 0);
}

TEST_CASE("cli: numerical failures exit with code 2") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  const fs::path path = temp_dir() / "cli_indefinite.txt";
  write_matrix_file(path.string(), bad);
  const std::string cmd = std::string(GRDR_BINARY) +
                          " estimate --cov.family file --cov.file " +
                          path.string() +
                          " --dims 2 --replications 50 --out_dir " +
                          (temp_dir() / "cli_numfail").string() +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
#endif
