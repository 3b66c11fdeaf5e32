#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "grdr/analysis.hpp"
#include "grdr/config.hpp"
#include "grdr/covariance.hpp"
#include "grdr/estimator.hpp"
#include "grdr/factor.hpp"
#include "grdr/payoff.hpp"
#include "grdr/schedule.hpp"

namespace grdr {

/// Everything built for one sweep point: covariance, factor, schedule and
/// payoff, all derived deterministically from the config.
struct ProblemInstance {
  CovarianceSpec covariance;
  FactorMatrix factor;
  QSchedule schedule;
  Payoff payoff;
  std::string family_label;
  std::string factor_label;
  std::string q_label;
};

ProblemInstance build_problem(const ExperimentConfig& cfg, int dim);

struct EstimateOutput {
  std::string csv;
  std::map<int, std::string> efficiency_json_per_dim;
  /// Wall time spent building covariance/factor/schedule per sweep point.
  /// This precomputation is excluded from the cost match and kept out of
  /// the (deterministic) result files; the CLI prints it.
  std::map<int, double> setup_seconds_per_dim;
  /// One message per sweep point that was aborted by a numerical error.
  std::vector<std::string> numerical_failures;
};

/// The estimate sweep: per d, a cost-matched standard-MC row and a GRDR
/// row, plus the efficiency comparison of the two. Deterministic for a
/// fixed config and seed.
EstimateOutput run_estimate(const ExperimentConfig& cfg);

struct BoundsOutput {
  std::string bounds_csv;
  std::map<int, std::string> curve_csv_per_dim;
  std::vector<std::string> numerical_failures;
};

/// Bound reports (and coupling-curve files) per sweep point.
BoundsOutput run_bounds(const ExperimentConfig& cfg);

struct CurvesOutput {
  std::map<int, std::string> curve_csv_per_dim;
  std::vector<std::string> numerical_failures;
};

/// Coupling curves only: the exact linear curve when the payoff is linear,
/// the empirical sampler otherwise.
CurvesOutput run_curves(const ExperimentConfig& cfg);

/// Invariant battery; prints one line per check to `log` and returns the
/// number of failures. Statistical checks use tolerances wide enough that
/// the verdict does not depend on the seed.
int run_selftest(std::ostream& log, std::uint64_t seed = 20240817);

}  // namespace grdr
