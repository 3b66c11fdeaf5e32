#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace grdr {

/// Configuration error carrying the offending field path in the message.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// One experiment description. Parsed from a `key = value` text file
/// (# comments allowed); every key can also be set on the command line by
/// a flag of the same name.
struct ExperimentConfig {
  // covariance source
  std::string cov_family = "eigendecay";  // eigendecay | equicorrelation | file
  double cov_gamma = -2.0;
  double cov_lambda1 = 1.0;
  std::string cov_orient = "diagonal";  // diagonal | rotation
  std::uint64_t cov_rotation_seed = 0;
  double cov_rho = 0.0;
  std::string cov_file;

  // payoff
  std::string payoff_kind = "linear";  // constant | linear | basket
  double payoff_constant = 0.0;
  // "ones", "scaled_ones" (d^{-1/2} per coordinate), "e1", or a vector file.
  std::string payoff_linear = "scaled_ones";
  // A number applied to every asset, or a vector file path.
  std::string payoff_sigma = "0.2";
  double payoff_rate = 0.0;
  double payoff_maturity = 1.0;
  double payoff_strike = 1.0;

  // method
  std::string factor_kind = "pca";  // cholesky | pca | pca-permute-check
  std::string q_kind = "factor";    // harmonic | factor | a q-vector file
  // Experimental override of the chain length; 0 keeps n = ceil(d / sum q),
  // the only choice with the O(d^2) expected-cost guarantee.
  long n_override = 0;
  long replications = 10000;
  std::uint64_t seed = 1;
  std::vector<int> dims = {16};  // strictly increasing sweep
  bool debug_verify = false;
  int threads = 1;
  // Compare at equal sample counts instead of equal arithmetic ops.
  bool equal_samples = false;
  long mc_samples = 0;  // 0 = derive from the cost match

  // analysis
  std::string kappa = "auto";  // auto | probe | a positive number
  long curve_pairs = 4000;
  long probe_samples = 4000;

  // output
  std::string out_dir = ".";
  std::string out_prefix = "grdr";

  static ExperimentConfig from_file(const std::string& path);

  /// Known keys in declaration order, for CLI flag generation.
  static const std::vector<std::string>& keys();

  /// Sets one key from its text form; throws ConfigError on unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);

  /// Cross-field validation: enum values, sweep ordering, and existence of
  /// every referenced file. Run before any computation starts.
  void validate() const;
};

}  // namespace grdr
