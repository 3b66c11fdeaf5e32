#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "grdr/factor.hpp"
#include "grdr/payoff.hpp"
#include "grdr/rng.hpp"
#include "grdr/schedule.hpp"

namespace grdr {

class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Outcome of one chain: the chain average f_n, the arithmetic-operation
/// tally, and the redraw depths observed.
///
/// The operation tally counts multiply-adds in the A * dU updates (the
/// initial full X = A U included), one op per Gaussian draw, and a flat d
/// per payoff evaluation.
struct ChainResult {
  double f_n = 0.0;
  std::uint64_t ops = 0;
  long depth_draws = 0;
  double depth_sum = 0.0;

  double mean_depth() const {
    return depth_draws > 0 ? depth_sum / depth_draws
                           : std::numeric_limits<double>::quiet_NaN();
  }
};

struct ChainOptions {
  /// Recompute X = A U from scratch every iteration and fail loudly if the
  /// incremental X drifted beyond 1e-6 * ||A||_F * ||U||.
  bool debug_verify = false;
  /// Invoked after every iteration (including the initial draw, k = 0)
  /// with (k, U, X).
  std::function<void(long, const Eigen::VectorXd&, const Eigen::VectorXd&)>
      observer;
};

/// One GRDR chain: draw U ~ N(0, I_d), X = A U, then n - 1 partial redraws
/// where only the first N coordinates of U are refreshed and X is updated
/// through the first N columns of A. Returns the average of g(X) over the
/// n states visited; E(f_n) = E(g(X)).
ChainResult grdr_chain(const Payoff& g, const FactorMatrix& fac,
                       const QSchedule& sched, RngStream& stream,
                       const ChainOptions& options = {});

struct EstimatorResult {
  std::string method;  // "mc" or "grdr"
  double estimate = 0.0;
  long replications = 0;  // chain count for GRDR, sample count for MC
  /// Unbiased sample variance of the per-replication values (per-chain f_n
  /// for GRDR, individual g(A U) values for MC).
  double var_fn_hat = 0.0;
  double std_error = 0.0;  // sqrt(var_fn_hat / replications)
  double mean_ops_per_replication = 0.0;
  std::uint64_t total_ops = 0;
  /// Observed average redraw depth; NaN when no depth is ever drawn
  /// (n = 1 chains), d for standard MC (every sample is a full redraw).
  double mean_depth = 0.0;
  std::uint64_t seed = 0;
  /// Hash of (covariance source, factor construction, q source, seed).
  std::uint64_t fingerprint = 0;
  /// Hash of (covariance source, payoff); efficiency comparisons require
  /// this to match between methods.
  std::uint64_t problem_fingerprint = 0;
};

/// Plain Monte Carlo: the average of g(A U) over n_samples independent
/// draws from the given stream.
EstimatorResult standard_mc(const Payoff& g, const FactorMatrix& fac,
                            long n_samples, RngStream& stream);

struct ReplicateOptions {
  int threads = 1;
  bool debug_verify = false;
};

/// R independent chains on streams (seed, 0..R-1). The estimate is the mean
/// of the per-chain f_n values and var_fn_hat their unbiased sample
/// variance. Chunked accumulation with a fixed chunk size keeps the result
/// bit-identical for any thread count.
EstimatorResult replicate_grdr(const Payoff& g, const FactorMatrix& fac,
                               const QSchedule& sched, long replications,
                               std::uint64_t seed,
                               const ReplicateOptions& options = {});

/// The per-chain f_n values behind replicate_grdr (same streams, same
/// order), for diagnostics that need the raw replication sample.
std::vector<double> grdr_replication_values(const Payoff& g,
                                            const FactorMatrix& fac,
                                            const QSchedule& sched,
                                            long replications,
                                            std::uint64_t seed);

/// CSV header and row format shared by the experiment runners.
std::string estimator_csv_header();
std::string estimator_csv_row(const EstimatorResult& result, int dim,
                              const std::string& family,
                              const std::string& factor,
                              const std::string& qkind);

}  // namespace grdr
