#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "grdr/analysis.hpp"
#include "grdr/covariance.hpp"
#include "grdr/estimator.hpp"
#include "grdr/factor.hpp"
#include "grdr/payoff.hpp"
#include "grdr/schedule.hpp"

using namespace grdr;

namespace {

QSchedule all_ones_schedule(int d) {
  return explicit_schedule(Eigen::VectorXd::Ones(d));
}

}  // namespace

TEST_CASE("q = 1 chain reproduces a single standard-MC draw bit for bit") {
  const CovarianceSpec spec =
      make_eigen_decay(6, -1.0, 1.0, Orientation::kRandomRotation, 2);
  const FactorMatrix fac = pca_factor(spec);
  const Payoff g = Payoff::basket_call(Eigen::VectorXd::Constant(6, 0.3), 0.01,
                                       1.5, 0.9);
  const QSchedule sched = all_ones_schedule(6);
  CHECK(sched.n_iterations == 1);

  RngStream chain_stream(11, 0);
  const ChainResult chain = grdr_chain(g, fac, sched, chain_stream);

  RngStream mc_stream(11, 0);
  const EstimatorResult mc = standard_mc(g, fac, 1, mc_stream);
  CHECK(chain.f_n == mc.estimate);
  CHECK(chain.depth_draws == 0);
  CHECK(std::isnan(chain.mean_depth()));
}

TEST_CASE("chain op accounting matches the drawn depths exactly") {
  const int d = 8;
  const FactorMatrix fac = pca_factor(make_eigen_decay(d, -2.0, 1.0));
  const QSchedule sched = schedule_from_factor(fac);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(d));
  RngStream stream(3, 5);
  const ChainResult chain = grdr_chain(g, fac, sched, stream);
  // d gaussians + d^2 multiply + d payoff, then per iteration:
  // N gaussians + d*N multiply-adds + d payoff.
  const auto d64 = static_cast<std::uint64_t>(d);
  const auto depth_total = static_cast<std::uint64_t>(chain.depth_sum);
  const std::uint64_t expected =
      d64 * d64 + 2 * d64 +
      static_cast<std::uint64_t>(sched.n_iterations - 1) * d64 +
      depth_total * (d64 + 1);
  CHECK(chain.ops == expected);
}

TEST_CASE("d = 1 harmonic chain agrees with standard MC in distribution") {
  const CovarianceSpec spec = make_equicorrelation(1, 0.0);
  const FactorMatrix fac = cholesky_factor(spec);
  const QSchedule sched = harmonic_schedule(1);
  const Payoff g = Payoff::basket_call(Eigen::VectorXd::Constant(1, 0.2), 0.0,
                                       1.0, 1.0);
  const long reps = 10000;
  const EstimatorResult grdr = replicate_grdr(g, fac, sched, reps, 77);
  RngStream mc_stream(78, 0);
  const EstimatorResult mc = standard_mc(g, fac, reps, mc_stream);
  const double joint_se = std::hypot(grdr.std_error, mc.std_error);
  CHECK(std::abs(grdr.estimate - mc.estimate) <= 4.0 * joint_se);
}

TEST_CASE("linear payoff replication mean is centered") {
  const CovarianceSpec spec = make_equicorrelation(2, 0.0);
  const FactorMatrix fac = pca_factor(spec);
  const QSchedule sched = harmonic_schedule(2);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(2));
  const EstimatorResult r = replicate_grdr(g, fac, sched, 10000, 5);
  CHECK(std::abs(r.estimate - 0.0) <= 4.0 * r.std_error);
}

TEST_CASE("standard_mc: constant payoff has zero variance") {
  const FactorMatrix fac = cholesky_factor(make_equicorrelation(3, 0.1));
  RngStream stream(9, 0);
  const EstimatorResult r =
      standard_mc(Payoff::constant(3, 4.5), fac, 1000, stream);
  CHECK(r.estimate == 4.5);
  CHECK(r.var_fn_hat == 0.0);
  CHECK(r.std_error == 0.0);
}

TEST_CASE("standard_mc: linear sample variance matches a^T M a") {
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 1.0, 1.0, 2.0;
  const CovarianceSpec spec = make_explicit(m);
  const FactorMatrix fac = cholesky_factor(spec);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(2));
  RngStream stream(123, 0);
  const long n = 100000;
  const EstimatorResult r = standard_mc(g, fac, n, stream);
  const double truth = 6.0;  // a^T M a
  // Gaussian sample variance has relative sd sqrt(2/(n-1)).
  const double band = 4.0 * truth * std::sqrt(2.0 / (n - 1));
  CHECK(std::abs(r.var_fn_hat - truth) <= band);
  CHECK(r.mean_depth == 2.0);
}

TEST_CASE("standard_mc: d = 1 basket converges to the BS oracle") {
  const CovarianceSpec unit = make_equicorrelation(1, 0.0);
  const FactorMatrix fac = cholesky_factor(unit);
  const Payoff g =
      Payoff::basket_call(Eigen::VectorXd::Constant(1, 0.2), 0.0, 1.0, 1.0);
  RngStream stream(2025, 0);
  const EstimatorResult r = standard_mc(g, fac, 1000000, stream);
  const double oracle = *analytic_mean(g, unit);
  CHECK(std::abs(r.estimate - oracle) <= 4.0 * r.std_error);
}

TEST_CASE("replicate_grdr is deterministic and reproducible bit for bit") {
  const FactorMatrix fac = pca_factor(make_eigen_decay(5, -2.0, 1.0));
  const QSchedule sched = schedule_from_factor(fac);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(5));
  const EstimatorResult a = replicate_grdr(g, fac, sched, 2, 31);
  const EstimatorResult b = replicate_grdr(g, fac, sched, 2, 31);
  CHECK(a.estimate == b.estimate);
  CHECK(a.var_fn_hat == b.var_fn_hat);
  CHECK(a.total_ops == b.total_ops);
  CHECK(a.fingerprint == b.fingerprint);

  // Thread count must not change any output bit (fixed chunking).
  ReplicateOptions two_threads;
  two_threads.threads = 2;
  const EstimatorResult c = replicate_grdr(g, fac, sched, 999, 31);
  const EstimatorResult d = replicate_grdr(g, fac, sched, 999, 31, two_threads);
  CHECK(c.estimate == d.estimate);
  CHECK(c.var_fn_hat == d.var_fn_hat);
  CHECK(c.total_ops == d.total_ops);
}

TEST_CASE("replication variance respects the factor-schedule bound") {
  // a = (1,1,1,1) on the i^-2 diagonal spectrum with the PCA factor.
  const CovarianceSpec spec = make_eigen_decay(4, -2.0, 1.0);
  const FactorMatrix fac = pca_factor(spec);
  const QSchedule sched = schedule_from_factor(fac);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(4));
  const EstimatorResult r = replicate_grdr(g, fac, sched, 5000, 17);
  const double kappa = 2.0;  // ||a||
  const double bound = bound_factor_q(fac, kappa);
  const std::vector<double> values =
      grdr_replication_values(g, fac, sched, 5000, 17);
  const double allowance = 1.0 + 5.0 * variance_rel_stderr(values);
  CHECK(r.var_fn_hat <= bound * allowance);
}

TEST_CASE("observed mean depth estimates E(N)") {
  const FactorMatrix fac = pca_factor(make_eigen_decay(16, -2.0, 1.0));
  const QSchedule sched = schedule_from_factor(fac);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(16));
  const EstimatorResult r = replicate_grdr(g, fac, sched, 4000, 23);
  // Loose CLT band: per-draw depth variance is at most E(N^2) <= d E(N).
  const double draws =
      static_cast<double>(r.replications) * (sched.n_iterations - 1);
  const double band =
      4.0 * std::sqrt(16.0 * sched.expected_depth / draws);
  CHECK(std::abs(r.mean_depth - sched.expected_depth) <= band);
}

TEST_CASE("chain keeps U marginally standard normal at every iteration") {
  const int d = 4;
  const FactorMatrix fac = pca_factor(make_eigen_decay(d, -2.0, 1.0));
  const QSchedule sched = schedule_from_factor(fac);
  REQUIRE(sched.n_iterations >= 2);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(d));

  const long reps = 4000;
  const long iters = sched.n_iterations;
  std::vector<Eigen::VectorXd> mean(iters, Eigen::VectorXd::Zero(d));
  std::vector<Eigen::VectorXd> sq(iters, Eigen::VectorXd::Zero(d));
  ChainOptions options;
  options.observer = [&](long k, const Eigen::VectorXd& u,
                         const Eigen::VectorXd&) {
    mean[k] += u;
    sq[k] += u.cwiseProduct(u);
  };
  for (long r = 0; r < reps; ++r) {
    RngStream stream(99, static_cast<std::uint64_t>(r));
    grdr_chain(g, fac, sched, stream, options);
  }
  for (long k = 0; k < iters; ++k) {
    for (int i = 0; i < d; ++i) {
      const double m = mean[k][i] / reps;
      const double v = sq[k][i] / reps - m * m;
      CHECK(std::abs(m) <= 5.0 / std::sqrt(static_cast<double>(reps)));
      CHECK(std::abs(v - 1.0) <=
            5.0 * std::sqrt(2.0 / static_cast<double>(reps)));
    }
  }
}

TEST_CASE("incremental X update stays within the drift budget") {
  const int d = 32;
  const CovarianceSpec spec =
      make_eigen_decay(d, -1.0, 1.0, Orientation::kRandomRotation, 8);
  const FactorMatrix fac = pca_factor(spec);
  const QSchedule sched = schedule_from_factor(fac);
  const Payoff g = Payoff::basket_call(Eigen::VectorXd::Constant(d, 0.2), 0.0,
                                       1.0, 1.0);

  // debug_verify recomputes A U at every iteration and throws on drift.
  ChainOptions verify;
  verify.debug_verify = true;
  RngStream stream(7, 0);
  CHECK_NOTHROW(grdr_chain(g, fac, sched, stream, verify));

  // Independent recomputation through the observer.
  const double a_frob = fac.entries.norm();
  ChainOptions observed;
  observed.observer = [&](long, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& x) {
    CHECK((x - fac.entries * u).norm() <= 1e-6 * a_frob * u.norm());
  };
  RngStream stream2(7, 1);
  grdr_chain(g, fac, sched, stream2, observed);
}

TEST_CASE("chain cost scales as d^2: log-log slope within 10% of flat") {
  std::vector<double> log_d, log_ops;
  for (int d = 16; d <= 1024; d *= 4) {
    const FactorMatrix fac = pca_factor(make_eigen_decay(d, -3.0, 1.0));
    const QSchedule sched = schedule_from_factor(fac);
    const Payoff g =
        Payoff::linear(Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(d)));
    const EstimatorResult r = replicate_grdr(g, fac, sched, 60, 13);
    log_d.push_back(std::log(static_cast<double>(d) * d));
    log_ops.push_back(std::log(r.mean_ops_per_replication));
  }
  // Least-squares slope of log(ops) against log(d^2).
  const auto n = static_cast<double>(log_d.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < log_d.size(); ++i) {
    mx += log_d[i];
    my += log_ops[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_d.size(); ++i) {
    sxx += (log_d[i] - mx) * (log_d[i] - mx);
    sxy += (log_d[i] - mx) * (log_ops[i] - my);
  }
  const double slope = sxy / sxx;
  CHECK(std::abs(slope - 1.0) <= 0.1);
}

TEST_CASE("replicate_grdr rejects R < 2 and dimension mismatches") {
  const FactorMatrix fac = pca_factor(make_eigen_decay(4, -2.0, 1.0));
  const QSchedule sched = schedule_from_factor(fac);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(4));
  CHECK_THROWS_AS(replicate_grdr(g, fac, sched, 1, 0), std::invalid_argument);
  const Payoff wrong = Payoff::linear(Eigen::VectorXd::Ones(5));
  CHECK_THROWS_AS(replicate_grdr(wrong, fac, sched, 10, 0),
                  std::invalid_argument);
}

TEST_CASE("csv rows carry the full schema") {
  const FactorMatrix fac = pca_factor(make_eigen_decay(4, -2.0, 1.0));
  const QSchedule sched = schedule_from_factor(fac);
  const Payoff g = Payoff::linear(Eigen::VectorXd::Ones(4));
  const EstimatorResult r = replicate_grdr(g, fac, sched, 100, 1);
  const std::string header = estimator_csv_header();
  const std::string row = estimator_csv_row(r, 4, "fam", "pca", "factor");
  const auto count = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',');
  };
  CHECK(count(header) == count(row));
  CHECK(row.substr(0, 5) == "grdr,");
}
