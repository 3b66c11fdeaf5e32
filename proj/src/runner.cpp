#include "grdr/runner.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "grdr/matrix_io.hpp"
#include "grdr/util.hpp"

namespace grdr {
namespace {

// Reserved stream ids, disjoint from replication ids 0..R-1.
constexpr std::uint64_t kMcStreamId = 1ull << 62;
constexpr std::uint64_t kCurveStreamId = (1ull << 62) + 1;
constexpr std::uint64_t kProbeStreamId = (1ull << 62) + 2;

CovarianceSpec build_covariance(const ExperimentConfig& cfg, int dim) {
  if (cfg.cov_family == "eigendecay") {
    const Orientation orient = cfg.cov_orient == "diagonal"
                                   ? Orientation::kDiagonal
                                   : Orientation::kRandomRotation;
    return make_eigen_decay(dim, cfg.cov_gamma, cfg.cov_lambda1, orient,
                            cfg.cov_rotation_seed);
  }
  if (cfg.cov_family == "equicorrelation")
    return make_equicorrelation(dim, cfg.cov_rho);
  CovarianceSpec spec = make_explicit(read_matrix_file(cfg.cov_file));
  if (spec.dim != dim)
    throw ConfigError("cov.file", "matrix dimension " +
                                      std::to_string(spec.dim) +
                                      " does not match d = " +
                                      std::to_string(dim));
  return spec;
}

Payoff build_payoff(const ExperimentConfig& cfg, int dim) {
  if (cfg.payoff_kind == "constant")
    return Payoff::constant(dim, cfg.payoff_constant);
  if (cfg.payoff_kind == "linear") {
    Eigen::VectorXd a;
    if (cfg.payoff_linear == "ones") {
      a = Eigen::VectorXd::Ones(dim);
    } else if (cfg.payoff_linear == "scaled_ones") {
      a = Eigen::VectorXd::Constant(dim, 1.0 / std::sqrt(dim));
    } else if (cfg.payoff_linear == "e1") {
      a = Eigen::VectorXd::Zero(dim);
      a[0] = 1.0;
    } else {
      a = read_vector_file(cfg.payoff_linear);
      if (a.size() != dim)
        throw ConfigError("payoff.linear",
                          "vector length does not match d = " +
                              std::to_string(dim));
    }
    return Payoff::linear(std::move(a));
  }
  Eigen::VectorXd sigmas;
  try {
    const double s = std::stod(cfg.payoff_sigma);
    sigmas = Eigen::VectorXd::Constant(dim, s);
  } catch (const std::exception&) {
    sigmas = read_vector_file(cfg.payoff_sigma);
    if (sigmas.size() != dim)
      throw ConfigError("payoff.sigma", "vector length does not match d = " +
                                            std::to_string(dim));
  }
  return Payoff::basket_call(std::move(sigmas), cfg.payoff_rate,
                             cfg.payoff_maturity, cfg.payoff_strike);
}

bool nonincreasing(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

}  // namespace

ProblemInstance build_problem(const ExperimentConfig& cfg, int dim) {
  ProblemInstance problem;
  problem.covariance = build_covariance(cfg, dim);
  problem.payoff = build_payoff(cfg, dim);
  problem.family_label = problem.covariance.source_label();

  if (cfg.factor_kind == "cholesky") {
    problem.factor = cholesky_factor(problem.covariance);
  } else {
    problem.factor = pca_factor(problem.covariance);
    if (cfg.factor_kind == "pca-permute-check") {
      const FactorMatrix permuted = permute_decreasing(problem.factor);
      for (int j = 0; j < dim; ++j)
        if (permuted.permutation[j] != j)
          throw NumericalError(
              "pca-permute-check: PCA column norms were not sorted (column " +
              std::to_string(j) + " moved)");
      problem.factor = permuted;
    }
  }

  // The factor-derived schedule needs nonincreasing column norms; reorder
  // the columns when the construction does not already guarantee it.
  if (cfg.q_kind == "factor" && !nonincreasing(problem.factor.col_sq_norms))
    problem.factor = permute_decreasing(problem.factor);
  problem.factor_label = problem.factor.construction_label();

  if (cfg.q_kind == "harmonic") {
    problem.schedule = harmonic_schedule(dim);
    problem.q_label = "harmonic";
  } else if (cfg.q_kind == "factor") {
    problem.schedule = schedule_from_factor(problem.factor);
    problem.q_label = "factor";
  } else {
    Eigen::VectorXd q = read_vector_file(cfg.q_kind);
    if (q.size() != dim)
      throw ConfigError("q", "q vector length does not match d = " +
                                 std::to_string(dim));
    problem.schedule = explicit_schedule(q);
    problem.q_label = "file:" + cfg.q_kind;
  }
  if (cfg.n_override > 0) {
    problem.schedule.n_iterations = cfg.n_override;
    problem.q_label += ";n=" + std::to_string(cfg.n_override);
  }
  return problem;
}

namespace {

struct KappaChoice {
  double value = 0.0;
  KappaProvenance provenance = KappaProvenance::kSupplied;
};

KappaChoice resolve_kappa(const ExperimentConfig& cfg,
                          const ProblemInstance& problem) {
  KappaChoice choice;
  if (cfg.kappa == "auto" && problem.payoff.kind == PayoffKind::kLinear) {
    // ||a|| is the exact Lipschitz constant of a linear payoff.
    choice.value = problem.payoff.linear_coeffs.norm();
    choice.provenance = KappaProvenance::kSupplied;
    return choice;
  }
  if (cfg.kappa == "auto" || cfg.kappa == "probe") {
    RngStream stream(cfg.seed, kProbeStreamId);
    choice.value = probe_kappa(problem.payoff, problem.covariance,
                               cfg.probe_samples, stream);
    choice.provenance = KappaProvenance::kProbed;
    return choice;
  }
  choice.value = std::stod(cfg.kappa);
  choice.provenance = KappaProvenance::kSupplied;
  return choice;
}

CouplingCurve build_curve(const ExperimentConfig& cfg,
                          const ProblemInstance& problem) {
  if (problem.payoff.kind == PayoffKind::kLinear)
    return coupling_curve_linear(problem.payoff.linear_coeffs, problem.factor);
  RngStream stream(cfg.seed, kCurveStreamId);
  return coupling_curve_empirical(problem.payoff, problem.factor,
                                  default_curve_indices(problem.factor.dim),
                                  cfg.curve_pairs, stream);
}

std::string curve_csv(const CouplingCurve& curve, const FactorMatrix& fac,
                      double kappa) {
  const Eigen::VectorXd lemma41 = bound_lemma41(fac, kappa);
  std::ostringstream os;
  os << "i,c_hat,stderr,lemma41_bound\n";
  for (std::size_t k = 0; k < curve.indices.size(); ++k) {
    const int i = curve.indices[k];
    const double se = curve.has_stderrs()
                          ? curve.stderrs[static_cast<Eigen::Index>(k)]
                          : 0.0;
    const double bound = i < fac.dim ? lemma41[i] : 0.0;
    os << i << ',' << format_g17(curve.values[static_cast<Eigen::Index>(k)])
       << ',' << format_g17(se) << ',' << format_g17(bound) << "\n";
  }
  return os.str();
}

// Per-point failures abort the row, not the sweep. Schedule and config
// errors are caller mistakes and propagate.
template <typename PerDim>
std::vector<std::string> sweep(const ExperimentConfig& cfg, PerDim&& per_dim) {
  std::vector<std::string> failures;
  for (int dim : cfg.dims) {
    try {
      per_dim(dim);
    } catch (const NotPsdError& e) {
      failures.push_back("d=" + std::to_string(dim) + ": " + e.what());
    } catch (const NumericalError& e) {
      failures.push_back("d=" + std::to_string(dim) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      failures.push_back("d=" + std::to_string(dim) + ": " + e.what());
    }
  }
  return failures;
}

}  // namespace

EstimateOutput run_estimate(const ExperimentConfig& cfg) {
  cfg.validate();
  EstimateOutput out;
  std::ostringstream csv;
  csv << estimator_csv_header() << "\n";

  out.numerical_failures = sweep(cfg, [&](int dim) {
    const auto setup_start = std::chrono::steady_clock::now();
    const ProblemInstance problem = build_problem(cfg, dim);
    out.setup_seconds_per_dim[dim] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      setup_start)
            .count();

    ReplicateOptions options;
    options.threads = cfg.threads;
    options.debug_verify = cfg.debug_verify;
    const EstimatorResult grdr =
        replicate_grdr(problem.payoff, problem.factor, problem.schedule,
                       cfg.replications, cfg.seed, options);

    // Cost-matched baseline: give standard MC the same total arithmetic
    // budget the GRDR suite actually consumed (or an explicit count).
    long n_mc = cfg.replications;
    if (!cfg.equal_samples) {
      const double per_sample =
          static_cast<double>(dim) * dim + 2.0 * dim;
      n_mc = std::max<long>(
          2, std::llround(static_cast<double>(grdr.total_ops) / per_sample));
    }
    if (cfg.mc_samples > 0) n_mc = cfg.mc_samples;
    RngStream mc_stream(cfg.seed, kMcStreamId);
    const EstimatorResult mc =
        standard_mc(problem.payoff, problem.factor, n_mc, mc_stream);

    csv << estimator_csv_row(mc, dim, problem.family_label,
                             problem.factor_label, problem.q_label)
        << "\n";
    csv << estimator_csv_row(grdr, dim, problem.family_label,
                             problem.factor_label, problem.q_label)
        << "\n";
    out.efficiency_json_per_dim[dim] = efficiency_report(mc, grdr).to_json();
  });

  out.csv = csv.str();
  return out;
}

BoundsOutput run_bounds(const ExperimentConfig& cfg) {
  cfg.validate();
  BoundsOutput out;
  std::ostringstream bounds;
  bounds << bound_report_csv_header() << "\n";

  out.numerical_failures = sweep(cfg, [&](int dim) {
    const ProblemInstance problem = build_problem(cfg, dim);
    const KappaChoice kappa = resolve_kappa(cfg, problem);

    const CouplingCurve raw = build_curve(cfg, problem);
    // Bounds assume the true nonincreasing C(i); empirical curves are
    // isotonically clamped first, while the emitted file keeps raw values.
    const CouplingCurve clamped = raw.source == CurveSource::kEmpirical
                                      ? isotonic_clamped(raw)
                                      : raw;

    BoundReport report = make_bound_report(
        problem.covariance, problem.factor, problem.schedule, kappa.value,
        kappa.provenance, clamped.full() ? &clamped : nullptr);
    report.seed = cfg.seed;
    bounds << bound_report_csv_row(report) << "\n";
    out.curve_csv_per_dim[dim] =
        curve_csv(raw, problem.factor, kappa.value);
  });

  out.bounds_csv = bounds.str();
  return out;
}

CurvesOutput run_curves(const ExperimentConfig& cfg) {
  cfg.validate();
  CurvesOutput out;
  out.numerical_failures = sweep(cfg, [&](int dim) {
    const ProblemInstance problem = build_problem(cfg, dim);
    const KappaChoice kappa = resolve_kappa(cfg, problem);
    out.curve_csv_per_dim[dim] =
        curve_csv(build_curve(cfg, problem), problem.factor, kappa.value);
  });
  return out;
}

namespace {

class SelftestLog {
 public:
  explicit SelftestLog(std::ostream& os) : os_(os) {}

  void check(const std::string& name, bool pass, const std::string& detail = "") {
    os_ << (pass ? "[ok]   " : "[FAIL] ") << name;
    if (!pass && !detail.empty()) os_ << ": " << detail;
    os_ << "\n";
    if (!pass) ++failures_;
  }

  template <typename Fn>
  void check_throws(const std::string& name, Fn&& fn) {
    bool threw = false;
    try {
      fn();
    } catch (const std::exception&) {
      threw = true;
    }
    check(name, threw, "expected an error");
  }

  int failures() const { return failures_; }

 private:
  std::ostream& os_;
  int failures_ = 0;
};

}  // namespace

int run_selftest(std::ostream& log, std::uint64_t seed) {
  SelftestLog t(log);
  const std::uint64_t kSeed = seed;

  // Factor residuals and the trace identity.
  {
    const std::vector<CovarianceSpec> specs = {
        make_eigen_decay(16, -2.0, 1.0, Orientation::kRandomRotation, 7),
        make_eigen_decay(32, -3.0, 2.5, Orientation::kDiagonal),
        make_equicorrelation(8, 0.3),
    };
    for (const CovarianceSpec& spec : specs) {
      for (const auto* name : {"cholesky", "pca"}) {
        const FactorMatrix fac = std::string(name) == "cholesky"
                                     ? cholesky_factor(spec)
                                     : pca_factor(spec);
        const double scale = std::max(spec.entries.norm(), 1.0);
        const double residual =
            (fac.entries * fac.entries.transpose() - spec.entries).norm();
        t.check("factor residual " + std::string(name) + " " +
                    spec.source_label(),
                residual <= 1e-8 * scale, format_g17(residual));
        const double trace_gap =
            std::abs(fac.col_sq_norms.sum() - spec.entries.trace());
        t.check("trace identity " + std::string(name) + " " +
                    spec.source_label(),
                trace_gap <= 1e-10 * std::abs(spec.entries.trace()),
                format_g17(trace_gap));
      }
    }
  }

  // Schedule laws.
  {
    const QSchedule harmonic = harmonic_schedule(64);
    const FactorMatrix pca =
        pca_factor(make_eigen_decay(64, -2.0, 1.0, Orientation::kDiagonal));
    const QSchedule from_factor = schedule_from_factor(pca);
    t.check("factor schedule of the i^-2 spectrum is exactly harmonic",
            from_factor.q == harmonic.q);

    bool ceiling_ok = true;
    for (int d : {1, 2, 3, 7, 64, 200}) {
      const QSchedule s = harmonic_schedule(d);
      const double sum = s.q.sum();
      ceiling_ok = ceiling_ok && s.n_iterations * sum >= d &&
                   (s.n_iterations - 1) * sum < d;
    }
    t.check("n = ceil(d / sum q) for harmonic schedules", ceiling_ok);

    RngStream stream(kSeed, 0);
    const long draws = 200000;
    double depth_sum = 0.0, depth_sq = 0.0;
    for (long i = 0; i < draws; ++i) {
      const int n = sample_depth(harmonic, stream);
      depth_sum += n;
      depth_sq += static_cast<double>(n) * n;
    }
    const double mean = depth_sum / draws;
    const double sd =
        std::sqrt((depth_sq - draws * mean * mean) / (draws - 1));
    const double gap = std::abs(mean - harmonic.expected_depth);
    t.check("E(N) matches sum(q)", gap <= 6.0 * sd / std::sqrt(draws),
            format_g17(gap));

    t.check_throws("explicit schedule rejects q0 != 1", [] {
      Eigen::VectorXd q(2);
      q << 0.9, 0.5;
      explicit_schedule(q);
    });
    t.check_throws("explicit schedule rejects non-monotone q", [] {
      Eigen::VectorXd q(3);
      q << 1.0, 0.5, 0.6;
      explicit_schedule(q);
    });
  }

  // Gaussian sampler moments.
  {
    RngStream stream(kSeed, 1);
    const long n = 200000;
    double sum = 0.0, sq = 0.0;
    for (long i = 0; i < n; ++i) {
      const double g = stream.gaussian();
      sum += g;
      sq += g * g;
    }
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1);
    t.check("gaussian mean", std::abs(mean) <= 6.0 / std::sqrt(n),
            format_g17(mean));
    t.check("gaussian variance",
            std::abs(var - 1.0) <= 6.0 * std::sqrt(2.0 / n),
            format_g17(var));
  }

  // Unbiasedness against the analytic oracles.
  {
    const CovarianceSpec cov = make_equicorrelation(8, 0.25);
    const FactorMatrix fac = cholesky_factor(cov);
    const QSchedule sched = harmonic_schedule(8);
    Eigen::VectorXd a = Eigen::VectorXd::Ones(8);
    const Payoff linear = Payoff::linear(a);
    const EstimatorResult grdr =
        replicate_grdr(linear, fac, sched, 4000, kSeed);
    t.check("linear payoff unbiasedness",
            std::abs(grdr.estimate) <= 6.0 * grdr.std_error,
            format_g17(grdr.estimate));

    const CovarianceSpec unit = make_equicorrelation(1, 0.0);
    const FactorMatrix unit_fac = cholesky_factor(unit);
    const Payoff basket = Payoff::basket_call(
        Eigen::VectorXd::Constant(1, 0.2), 0.0, 1.0, 1.0);
    RngStream stream(kSeed, 2);
    const EstimatorResult mc = standard_mc(basket, unit_fac, 20000, stream);
    const double oracle = *analytic_mean(basket, unit);
    t.check("basket call matches Black-Scholes",
            std::abs(mc.estimate - oracle) <= 6.0 * mc.std_error,
            format_g17(mc.estimate - oracle));
  }

  // Variance inequalities on the linear oracle.
  {
    const CovarianceSpec cov =
        make_eigen_decay(16, -2.0, 1.0, Orientation::kRandomRotation, 5);
    const FactorMatrix fac = pca_factor(cov);
    const QSchedule sched = schedule_from_factor(fac);
    RngStream coeff_stream(kSeed, 3);
    Eigen::VectorXd a = standard_normal_vec(coeff_stream, 16);
    a /= a.norm();
    const Payoff linear = Payoff::linear(a);

    const long reps = 4000;
    const std::vector<double> values =
        grdr_replication_values(linear, fac, sched, reps, kSeed);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= reps;
    double m2 = 0.0;
    for (double v : values) m2 += (v - mean) * (v - mean);
    const double var_hat = m2 / (reps - 1);
    const double allowance = 1.0 + 5.0 * variance_rel_stderr(values);

    const CouplingCurve curve = coupling_curve_linear(a, fac);
    double eq4 = 0.0;
    for (int i = 0; i < 16; ++i)
      eq4 += (curve.values[i] - curve.values[i + 1]) / sched.q[i];
    eq4 *= 2.0;
    const double eq6 = bound_eq6(curve, sched);

    t.check("variance bound n Var(f_n) <= 2 sum dC/q",
            sched.n_iterations * var_hat <= eq4 * allowance,
            format_g17(sched.n_iterations * var_hat) + " vs " +
                format_g17(eq4));
    t.check("variance bound Var(f_n) <= (2/d)(sum q)(sum dC/q)",
            var_hat <= eq6 * allowance,
            format_g17(var_hat) + " vs " + format_g17(eq6));
  }

  // Bit-level determinism of the replication harness.
  {
    const CovarianceSpec cov = make_eigen_decay(8, -1.5, 1.0);
    const FactorMatrix fac = pca_factor(cov);
    const QSchedule sched = schedule_from_factor(fac);
    const Payoff linear = Payoff::linear(Eigen::VectorXd::Ones(8));
    const EstimatorResult r1 = replicate_grdr(linear, fac, sched, 500, kSeed);
    const EstimatorResult r2 = replicate_grdr(linear, fac, sched, 500, kSeed);
    t.check("replication determinism",
            r1.estimate == r2.estimate && r1.var_fn_hat == r2.var_fn_hat &&
                r1.total_ops == r2.total_ops);
  }

  return t.failures();
}

}  // namespace grdr
