#include "grdr/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <sstream>
#include <vector>

#include "grdr/util.hpp"

namespace grdr {
namespace {

void check_dims(const Payoff& g, const FactorMatrix& fac,
                const QSchedule* sched) {
  if (g.dim != fac.dim)
    throw std::invalid_argument("estimator: payoff/factor dimension mismatch");
  if (sched && sched->dim != fac.dim)
    throw std::invalid_argument(
        "estimator: schedule/factor dimension mismatch");
}

// Streaming mean/variance accumulator with an order-independent pairwise
// merge (Chan et al.).
struct MomentAccumulator {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const MomentAccumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double delta = other.mean - mean;
    const long total = count + other.count;
    mean += delta * other.count / total;
    m2 += other.m2 +
          delta * delta * (static_cast<double>(count) * other.count / total);
    count = total;
  }

  double unbiased_variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
};

struct ChunkTally {
  MomentAccumulator moments;
  std::uint64_t ops = 0;
  double depth_sum = 0.0;
  long depth_draws = 0;
};

std::uint64_t grdr_fingerprint(const FactorMatrix& fac, const QSchedule& sched,
                               std::uint64_t seed) {
  std::uint64_t h = fac.fingerprint_component();
  h = hash_combine(h, sched.fingerprint_component());
  return hash_u64(seed, h);
}

std::uint64_t problem_fingerprint_of(const FactorMatrix& fac,
                                     const Payoff& g) {
  return hash_combine(fac.source_fingerprint, g.fingerprint_component());
}

}  // namespace

ChainResult grdr_chain(const Payoff& g, const FactorMatrix& fac,
                       const QSchedule& sched, RngStream& stream,
                       const ChainOptions& options) {
  check_dims(g, fac, &sched);
  const int d = fac.dim;
  const Eigen::MatrixXd& a = fac.entries;
  const std::uint64_t d64 = static_cast<std::uint64_t>(d);

  ChainResult result;
  Eigen::VectorXd u = standard_normal_vec(stream, d);
  result.ops += d64;
  Eigen::VectorXd x = a * u;
  result.ops += d64 * d64;
  double sum = evaluate(g, x);
  result.ops += d64;

  const double a_frob = options.debug_verify ? a.norm() : 0.0;
  if (options.observer) options.observer(0, u, x);

  Eigen::VectorXd fresh(d), delta(d);
  for (long k = 1; k < sched.n_iterations; ++k) {
    const int depth = sample_depth(sched, stream);
    result.depth_sum += depth;
    ++result.depth_draws;

    for (int j = 0; j < depth; ++j) fresh[j] = stream.gaussian();
    result.ops += static_cast<std::uint64_t>(depth);

    delta.head(depth) = fresh.head(depth) - u.head(depth);
    x.noalias() += a.leftCols(depth) * delta.head(depth);
    result.ops += d64 * static_cast<std::uint64_t>(depth);

    sum += evaluate(g, x);
    result.ops += d64;
    u.head(depth) = fresh.head(depth);

    if (options.debug_verify) {
      const double drift = (x - a * u).norm();
      const double budget = 1e-6 * a_frob * u.norm();
      if (drift > budget) {
        std::ostringstream os;
        os << "grdr_chain: incremental X drifted from A U at iteration " << k
           << " (" << format_g17(drift) << " > " << format_g17(budget) << ")";
        throw NumericalError(os.str());
      }
    }
    if (options.observer) options.observer(k, u, x);
  }

  result.f_n = sum / static_cast<double>(sched.n_iterations);
  return result;
}

EstimatorResult standard_mc(const Payoff& g, const FactorMatrix& fac,
                            long n_samples, RngStream& stream) {
  check_dims(g, fac, nullptr);
  if (n_samples < 1)
    throw std::invalid_argument("standard_mc: n_samples must be >= 1");
  const int d = fac.dim;
  const std::uint64_t d64 = static_cast<std::uint64_t>(d);
  const Eigen::MatrixXd& a = fac.entries;

  MomentAccumulator moments;
  std::uint64_t ops = 0;
  Eigen::VectorXd u(d), x(d);
  for (long s = 0; s < n_samples; ++s) {
    for (int j = 0; j < d; ++j) u[j] = stream.gaussian();
    x.noalias() = a * u;
    moments.add(evaluate(g, x));
    ops += d64 * d64 + 2 * d64;
  }

  EstimatorResult result;
  result.method = "mc";
  result.estimate = moments.mean;
  result.replications = n_samples;
  result.var_fn_hat = moments.unbiased_variance();
  result.std_error = std::sqrt(result.var_fn_hat / n_samples);
  result.total_ops = ops;
  result.mean_ops_per_replication =
      static_cast<double>(ops) / static_cast<double>(n_samples);
  result.mean_depth = d;
  result.seed = stream.seed();
  std::uint64_t h = fac.fingerprint_component();
  h = hash_string("mc", h);
  result.fingerprint = hash_u64(stream.seed(), h);
  result.problem_fingerprint = problem_fingerprint_of(fac, g);
  return result;
}

EstimatorResult replicate_grdr(const Payoff& g, const FactorMatrix& fac,
                               const QSchedule& sched, long replications,
                               std::uint64_t seed,
                               const ReplicateOptions& options) {
  check_dims(g, fac, &sched);
  if (replications < 2)
    throw std::invalid_argument("replicate_grdr: need at least 2 replications");

  // Fixed chunking: the merge order, and therefore every output bit, is
  // independent of the thread count.
  constexpr long kChunk = 256;
  const long n_chunks = (replications + kChunk - 1) / kChunk;

  ChainOptions chain_options;
  chain_options.debug_verify = options.debug_verify;

  auto run_chunk = [&](long chunk) {
    ChunkTally tally;
    const long begin = chunk * kChunk;
    const long end = std::min(begin + kChunk, replications);
    for (long r = begin; r < end; ++r) {
      RngStream stream(seed, static_cast<std::uint64_t>(r));
      const ChainResult chain = grdr_chain(g, fac, sched, stream, chain_options);
      tally.moments.add(chain.f_n);
      tally.ops += chain.ops;
      tally.depth_sum += chain.depth_sum;
      tally.depth_draws += chain.depth_draws;
    }
    return tally;
  };

  std::vector<ChunkTally> tallies(n_chunks);
  const int threads = std::max(1, options.threads);
  if (threads == 1 || n_chunks == 1) {
    for (long c = 0; c < n_chunks; ++c) tallies[c] = run_chunk(c);
  } else {
    std::vector<std::future<void>> workers;
    std::atomic<long> next{0};
    for (int t = 0; t < threads; ++t)
      workers.push_back(std::async(std::launch::async, [&] {
        for (long c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1))
          tallies[c] = run_chunk(c);
      }));
    for (auto& w : workers) w.get();
  }

  ChunkTally total;
  for (const ChunkTally& tally : tallies) {
    total.moments.merge(tally.moments);
    total.ops += tally.ops;
    total.depth_sum += tally.depth_sum;
    total.depth_draws += tally.depth_draws;
  }

  EstimatorResult result;
  result.method = "grdr";
  result.estimate = total.moments.mean;
  result.replications = replications;
  result.var_fn_hat = total.moments.unbiased_variance();
  result.std_error = std::sqrt(result.var_fn_hat / replications);
  result.total_ops = total.ops;
  result.mean_ops_per_replication =
      static_cast<double>(total.ops) / static_cast<double>(replications);
  result.mean_depth = total.depth_draws > 0
                          ? total.depth_sum / total.depth_draws
                          : std::numeric_limits<double>::quiet_NaN();
  result.seed = seed;
  result.fingerprint = grdr_fingerprint(fac, sched, seed);
  result.problem_fingerprint = problem_fingerprint_of(fac, g);
  return result;
}

std::vector<double> grdr_replication_values(const Payoff& g,
                                            const FactorMatrix& fac,
                                            const QSchedule& sched,
                                            long replications,
                                            std::uint64_t seed) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(replications));
  for (long r = 0; r < replications; ++r) {
    RngStream stream(seed, static_cast<std::uint64_t>(r));
    values.push_back(grdr_chain(g, fac, sched, stream).f_n);
  }
  return values;
}

std::string estimator_csv_header() {
  return "method,d,family,factor,qkind,R,estimate,stderr,var_fn_hat,mean_ops,"
         "mean_depth,seed,fingerprint";
}

std::string estimator_csv_row(const EstimatorResult& result, int dim,
                              const std::string& family,
                              const std::string& factor,
                              const std::string& qkind) {
  std::ostringstream os;
  os << result.method << ',' << dim << ',' << family << ',' << factor << ','
     << qkind << ',' << result.replications << ','
     << format_g17(result.estimate) << ',' << format_g17(result.std_error)
     << ',' << format_g17(result.var_fn_hat) << ','
     << format_g17(result.mean_ops_per_replication) << ','
     << format_g17(result.mean_depth) << ',' << result.seed << ',' << std::hex
     << result.fingerprint;
  return os.str();
}

}  // namespace grdr
