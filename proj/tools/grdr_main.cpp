// Experiment runner for the GRDR estimator library.
//
// Subcommands:
//   estimate  cost-matched standard-MC vs GRDR sweep -> CSV + efficiency JSON
//   bounds    variance-bound reports and coupling-curve files
//   curves    coupling curves only
//   selftest  fixed-seed invariant battery
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 3 selftest failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "grdr/config.hpp"
#include "grdr/runner.hpp"

namespace {

namespace fs = std::filesystem;

struct CliState {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_options(CLI::App& cmd, CliState& state) {
  cmd.add_option("-c,--config", state.config_path,
                 "Key-value config file (key = value per line)");
  for (const std::string& key : grdr::ExperimentConfig::keys()) {
    const std::string flag = "--" + key;
    cmd.add_option_function<std::string>(
           flag,
           [&state, key](const std::string& value) {
             state.overrides.emplace_back(key, value);
           },
           "Override config key '" + key + "'")
        ->type_name("VALUE");
  }
}

grdr::ExperimentConfig load_config(const CliState& state) {
  grdr::ExperimentConfig cfg;
  if (!state.config_path.empty())
    cfg = grdr::ExperimentConfig::from_file(state.config_path);
  for (const auto& [key, value] : state.overrides) cfg.set(key, value);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

fs::path out_path(const grdr::ExperimentConfig& cfg, const std::string& name) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir / (cfg.out_prefix + "_" + name);
}

int report_failures(const std::vector<std::string>& failures) {
  for (const std::string& f : failures)
    std::cerr << "numerical failure: " << f << "\n";
  return failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRDR: randomized dimension reduction for Gaussian functionals"};
  app.require_subcommand(1);

  CliState state;
  CLI::App* estimate = app.add_subcommand(
      "estimate", "Cost-matched MC vs GRDR estimates over the d sweep");
  CLI::App* bounds =
      app.add_subcommand("bounds", "Variance bound reports and curve files");
  CLI::App* curves = app.add_subcommand("curves", "Coupling curve files");
  CLI::App* selftest =
      app.add_subcommand("selftest", "Run the invariant battery");
  for (CLI::App* cmd : {estimate, bounds, curves})
    add_config_options(*cmd, state);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (selftest->parsed()) {
      const int failures = grdr::run_selftest(std::cout);
      if (failures > 0) {
        std::cout << failures << " selftest check(s) failed\n";
        return 3;
      }
      std::cout << "selftest passed\n";
      return 0;
    }

    const grdr::ExperimentConfig cfg = load_config(state);

    if (estimate->parsed()) {
      const grdr::EstimateOutput out = grdr::run_estimate(cfg);
      const fs::path csv = out_path(cfg, "estimate.csv");
      write_text(csv, out.csv);
      std::cout << "wrote " << csv.string() << "\n";
      for (const auto& [dim, seconds] : out.setup_seconds_per_dim)
        std::cout << "d=" << dim << ": factorization/setup " << seconds
                  << " s (excluded from the cost match)\n";
      for (const auto& [dim, json] : out.efficiency_json_per_dim) {
        const fs::path path =
            out_path(cfg, "efficiency_d" + std::to_string(dim) + ".json");
        write_text(path, json + "\n");
        std::cout << "wrote " << path.string() << "\n";
      }
      return report_failures(out.numerical_failures);
    }
    if (bounds->parsed()) {
      const grdr::BoundsOutput out = grdr::run_bounds(cfg);
      const fs::path csv = out_path(cfg, "bounds.csv");
      write_text(csv, out.bounds_csv);
      std::cout << "wrote " << csv.string() << "\n";
      for (const auto& [dim, text] : out.curve_csv_per_dim) {
        const fs::path path =
            out_path(cfg, "curve_d" + std::to_string(dim) + ".csv");
        write_text(path, text);
        std::cout << "wrote " << path.string() << "\n";
      }
      return report_failures(out.numerical_failures);
    }
    if (curves->parsed()) {
      const grdr::CurvesOutput out = grdr::run_curves(cfg);
      for (const auto& [dim, text] : out.curve_csv_per_dim) {
        const fs::path path =
            out_path(cfg, "curve_d" + std::to_string(dim) + ".csv");
        write_text(path, text);
        std::cout << "wrote " << path.string() << "\n";
      }
      return report_failures(out.numerical_failures);
    }
  } catch (const grdr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const grdr::ScheduleError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const grdr::NotPsdError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const grdr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
