#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grdr/estimator.hpp"
#include "grdr/factor.hpp"
#include "grdr/payoff.hpp"
#include "grdr/rng.hpp"
#include "grdr/schedule.hpp"

namespace grdr {

enum class CurveSource { kEmpirical, kAnalyticLinear };

/// Coupling covariances C(i) = Cov(f(U), f(U')) where f(z) = g(A z) and U'
/// redraws the first i coordinates of U, sharing the last d - i. C(0) is
/// Var(f(U)) and C(d) = 0.
struct CouplingCurve {
  int dim = 0;
  std::vector<int> indices;  // strictly increasing subset of {0..d}
  Eigen::VectorXd values;    // C at each index
  Eigen::VectorXd stderrs;   // jackknife errors; empty for analytic curves
  CurveSource source = CurveSource::kAnalyticLinear;
  long pairs_per_point = 0;

  /// True when the curve covers every index 0..d.
  bool full() const;
  double value_at(int i) const;
  bool has_stderrs() const { return stderrs.size() == values.size(); }
};

/// Exact curve for the linear payoff a^T x: with w = A^T a,
/// C(i) = sum_{j > i} w_j^2, accumulated backward so the small tail terms
/// add first.
CouplingCurve coupling_curve_linear(const Eigen::VectorXd& a,
                                    const FactorMatrix& fac);

/// Sample covariance of (f(U), f(U')) over coupled pairs at each requested
/// index, with jackknife standard errors.
CouplingCurve coupling_curve_empirical(const Payoff& g,
                                       const FactorMatrix& fac,
                                       const std::vector<int>& indices,
                                       long pairs, RngStream& stream);

/// All of 0..d when d <= 64, otherwise {0, 1, 2, 4, ..., d} (log-spaced).
std::vector<int> default_curve_indices(int d);

/// Pool-adjacent-violators projection onto nonincreasing sequences.
Eigen::VectorXd isotonic_nonincreasing(const Eigen::VectorXd& values);

/// Curve with values replaced by their isotonic (nonincreasing) projection;
/// raw curves stay available to the caller.
CouplingCurve isotonic_clamped(const CouplingCurve& curve);

/// Per-index bounds kappa^2 * sum_{j>i} (A^T A)_jj for i = 0..d-1; entry 0
/// equals kappa^2 tr(M).
Eigen::VectorXd bound_lemma41(const FactorMatrix& fac, double kappa);

/// (2/d) (sum q_i) (sum (C(i) - C(i+1)) / q_i), the generic variance bound
/// on Var(f_n). Requires a full nonincreasing curve (clamp empirical
/// curves first).
double bound_eq6(const CouplingCurve& curve, const QSchedule& sched);

struct HarmonicBound {
  double value = 0.0;  // (2 (1 + ln d)/d) sum_{i<d} C(i)
  double cap = 0.0;    // 2 (1 + ln d) C(0)
};
HarmonicBound bound_harmonic(const CouplingCurve& curve);

/// (2 kappa^2 / d)(sum_i sqrt((A^T A)_ii))^2, the variance bound for the
/// q-from-factor schedule. For PCA factors this is the
/// (2 kappa^2 / d)(sum sqrt(lambda_i))^2 form.
double bound_factor_q(const FactorMatrix& fac, double kappa);

/// Empirical lower estimate of the (kappa, M)-Lipschitz constant: the
/// largest sqrt(mean((g(Y)-g(Y'))^2) / mean(||Y-Y'||^2)) over prefix-redraw
/// couplings and scaled couplings Y' = cY, c in {0, 0.5, 0.9}.
double probe_kappa(const Payoff& g, const CovarianceSpec& spec, long probes,
                   RngStream& stream);

/// Relative standard error of the unbiased sample variance of `values`,
/// from the moment formula Var(s^2) = (m4 - (n-3)/(n-1) s^4) / n.
double variance_rel_stderr(const std::vector<double>& values);

enum class KappaProvenance { kSupplied, kProbed };

struct BoundReport {
  int dim = 0;
  double kappa = 0.0;
  KappaProvenance provenance = KappaProvenance::kSupplied;
  double sigma_bound = 0.0;           // kappa^2 tr(M)
  double varfn_bound_factor = 0.0;    // factor-schedule bound from col norms
  double varfn_bound_pca = 0.0;       // same bound from the eigenvalues of M
  double varfn_bound_harmonic = 0.0;  // NaN without a full curve
  double harmonic_cap = 0.0;          // NaN without a curve
  double generic_bound_eq6 = 0.0;     // NaN without a full curve
  std::uint64_t seed = 0;
  std::uint64_t fingerprint = 0;
};

/// Evaluates every closed-form bound for one (M, A, q, kappa) configuration;
/// curve may be null, in which case the curve-dependent entries are NaN.
BoundReport make_bound_report(const CovarianceSpec& spec,
                              const FactorMatrix& fac, const QSchedule& sched,
                              double kappa, KappaProvenance provenance,
                              const CouplingCurve* curve);

std::string bound_report_csv_header();
std::string bound_report_csv_row(const BoundReport& report);

/// Cost/variance comparison of a standard-MC run against a GRDR run on the
/// same problem (same covariance and payoff fingerprint).
struct EfficiencyReport {
  std::uint64_t problem_fingerprint = 0;
  double variance_mc = 0.0;    // per-sample variance Sigma-hat
  double variance_grdr = 0.0;  // per-chain variance of f_n
  double variance_ratio = 0.0; // Sigma-hat / Var-hat(f_n)
  double ops_per_mc_sample = 0.0;
  double ops_per_grdr_chain = 0.0;
  /// (variance_mc * cost_mc) / (variance_grdr * cost_grdr): the ratio of
  /// estimator variances when both methods spend the same total ops, and
  /// equally the tau_MC/tau_GRDR ratio of the dominant 1/eps^2 cost terms.
  double work_normalized_ratio = 0.0;
  double tau_mc_coeff = 0.0;    // tau_MC(eps) ~ coeff / eps^2
  double tau_grdr_coeff = 0.0;  // tau_GRDR(eps) ~ coeff / eps^2
  std::uint64_t mc_seed = 0;
  std::uint64_t grdr_seed = 0;

  std::string to_json() const;
};

EfficiencyReport efficiency_report(const EstimatorResult& mc,
                                   const EstimatorResult& grdr);

}  // namespace grdr
