#include "grdr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include "json.hpp"

#include "grdr/util.hpp"

namespace grdr {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_full(const CouplingCurve& curve, const char* who) {
  if (!curve.full())
    throw std::invalid_argument(std::string(who) +
                                ": requires a curve covering every index 0..d");
}

void require_nonincreasing(const CouplingCurve& curve, const char* who) {
  for (Eigen::Index i = 1; i < curve.values.size(); ++i)
    if (curve.values[i] > curve.values[i - 1])
      throw std::invalid_argument(
          std::string(who) +
          ": curve must be nonincreasing; clamp empirical curves first");
}

}  // namespace

bool CouplingCurve::full() const {
  if (static_cast<int>(indices.size()) != dim + 1) return false;
  for (int i = 0; i <= dim; ++i)
    if (indices[i] != i) return false;
  return true;
}

double CouplingCurve::value_at(int i) const {
  const auto it = std::lower_bound(indices.begin(), indices.end(), i);
  if (it == indices.end() || *it != i)
    throw std::out_of_range("CouplingCurve: index " + std::to_string(i) +
                            " not evaluated");
  return values[it - indices.begin()];
}

CouplingCurve coupling_curve_linear(const Eigen::VectorXd& a,
                                    const FactorMatrix& fac) {
  if (a.size() != fac.dim)
    throw std::invalid_argument("coupling_curve_linear: dimension mismatch");
  const int d = fac.dim;
  const Eigen::VectorXd w = fac.entries.transpose() * a;

  CouplingCurve curve;
  curve.dim = d;
  curve.source = CurveSource::kAnalyticLinear;
  curve.indices.resize(d + 1);
  curve.values.resize(d + 1);
  curve.values[d] = 0.0;
  curve.indices[d] = d;
  for (int i = d - 1; i >= 0; --i) {
    curve.values[i] = curve.values[i + 1] + w[i] * w[i];
    curve.indices[i] = i;
  }
  return curve;
}

CouplingCurve coupling_curve_empirical(const Payoff& g,
                                       const FactorMatrix& fac,
                                       const std::vector<int>& indices,
                                       long pairs, RngStream& stream) {
  if (g.dim != fac.dim)
    throw std::invalid_argument("coupling_curve_empirical: dimension mismatch");
  if (pairs < 2)
    throw std::invalid_argument("coupling_curve_empirical: pairs must be >= 2");
  const int d = fac.dim;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] > d)
      throw std::invalid_argument("coupling_curve_empirical: index out of range");
    if (k > 0 && indices[k] <= indices[k - 1])
      throw std::invalid_argument(
          "coupling_curve_empirical: indices must be strictly increasing");
  }

  const Eigen::MatrixXd& a = fac.entries;
  CouplingCurve curve;
  curve.dim = d;
  curve.source = CurveSource::kEmpirical;
  curve.indices = indices;
  curve.pairs_per_point = pairs;
  curve.values.resize(static_cast<Eigen::Index>(indices.size()));
  curve.stderrs.resize(static_cast<Eigen::Index>(indices.size()));

  Eigen::VectorXd u(d), x(d), fresh(d), delta(d), x_prime(d);
  std::vector<double> f(pairs), f_prime(pairs);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int i = indices[k];
    for (long p = 0; p < pairs; ++p) {
      for (int j = 0; j < d; ++j) u[j] = stream.gaussian();
      x.noalias() = a * u;
      f[p] = evaluate(g, x);
      if (i == 0) {
        // U' == U: both coordinates of the pair evaluate the same draw.
        f_prime[p] = evaluate(g, x);
      } else {
        for (int j = 0; j < i; ++j) fresh[j] = stream.gaussian();
        delta.head(i) = fresh.head(i) - u.head(i);
        x_prime = x;
        x_prime.noalias() += a.leftCols(i) * delta.head(i);
        f_prime[p] = evaluate(g, x_prime);
      }
    }

    // Unbiased sample covariance plus its jackknife standard error.
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (long p = 0; p < pairs; ++p) {
      sx += f[p];
      sy += f_prime[p];
      sxy += f[p] * f_prime[p];
    }
    const double n = static_cast<double>(pairs);
    const double cov = (sxy - sx * sy / n) / (n - 1.0);

    double loo_mean = 0.0;
    std::vector<double> loo(pairs);
    for (long p = 0; p < pairs; ++p) {
      const double sx_p = sx - f[p];
      const double sy_p = sy - f_prime[p];
      const double sxy_p = sxy - f[p] * f_prime[p];
      loo[p] = (sxy_p - sx_p * sy_p / (n - 1.0)) / (n - 2.0);
      loo_mean += loo[p];
    }
    loo_mean /= n;
    double ss = 0.0;
    for (long p = 0; p < pairs; ++p)
      ss += (loo[p] - loo_mean) * (loo[p] - loo_mean);

    curve.values[static_cast<Eigen::Index>(k)] = cov;
    curve.stderrs[static_cast<Eigen::Index>(k)] =
        std::sqrt((n - 1.0) / n * ss);
  }
  return curve;
}

std::vector<int> default_curve_indices(int d) {
  std::vector<int> indices;
  if (d <= 64) {
    for (int i = 0; i <= d; ++i) indices.push_back(i);
    return indices;
  }
  indices.push_back(0);
  for (int i = 1; i < d; i *= 2) indices.push_back(i);
  indices.push_back(d);
  return indices;
}

Eigen::VectorXd isotonic_nonincreasing(const Eigen::VectorXd& values) {
  // Pool-adjacent-violators: blocks carry (sum, count) and merge while a
  // block's mean falls below its successor's, leaving block means
  // nonincreasing.
  const Eigen::Index n = values.size();
  std::vector<double> block_sum;
  std::vector<long> block_count;
  block_sum.reserve(n);
  block_count.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    block_sum.push_back(values[i]);
    block_count.push_back(1);
    while (block_sum.size() > 1) {
      const std::size_t last = block_sum.size() - 1;
      if (block_sum[last - 1] / block_count[last - 1] >=
          block_sum[last] / block_count[last])
        break;
      block_sum[last - 1] += block_sum[last];
      block_count[last - 1] += block_count[last];
      block_sum.pop_back();
      block_count.pop_back();
    }
  }
  Eigen::VectorXd out(n);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < block_sum.size(); ++b) {
    const double level = block_sum[b] / block_count[b];
    for (long c = 0; c < block_count[b]; ++c) out[pos++] = level;
  }
  return out;
}

CouplingCurve isotonic_clamped(const CouplingCurve& curve) {
  CouplingCurve out = curve;
  out.values = isotonic_nonincreasing(curve.values);
  return out;
}

Eigen::VectorXd bound_lemma41(const FactorMatrix& fac, double kappa) {
  if (!(kappa > 0.0))
    throw std::invalid_argument("bound_lemma41: kappa must be positive");
  const int d = fac.dim;
  Eigen::VectorXd bounds(d);
  double suffix = 0.0;
  for (int i = d - 1; i >= 0; --i) {
    suffix += fac.col_sq_norms[i];
    bounds[i] = kappa * kappa * suffix;
  }
  return bounds;
}

double bound_eq6(const CouplingCurve& curve, const QSchedule& sched) {
  require_full(curve, "bound_eq6");
  require_nonincreasing(curve, "bound_eq6");
  if (curve.dim != sched.dim)
    throw std::invalid_argument("bound_eq6: curve/schedule dimension mismatch");
  const int d = curve.dim;
  double weighted = 0.0;
  for (int i = 0; i < d; ++i)
    weighted += (curve.values[i] - curve.values[i + 1]) / sched.q[i];
  return 2.0 / d * sched.q.sum() * weighted;
}

HarmonicBound bound_harmonic(const CouplingCurve& curve) {
  require_full(curve, "bound_harmonic");
  const int d = curve.dim;
  const double factor = 2.0 * (1.0 + std::log(static_cast<double>(d))) / d;
  HarmonicBound bound;
  bound.value = factor * curve.values.head(d).sum();
  bound.cap = factor * d * curve.values[0];
  return bound;
}

double bound_factor_q(const FactorMatrix& fac, double kappa) {
  if (!(kappa > 0.0))
    throw std::invalid_argument("bound_factor_q: kappa must be positive");
  const Eigen::VectorXd& c = fac.col_sq_norms;
  for (Eigen::Index i = 1; i < c.size(); ++i)
    if (c[i] > c[i - 1])
      throw std::invalid_argument(
          "bound_factor_q: column square norms must be nonincreasing");
  const double root_sum = c.cwiseSqrt().sum();
  return 2.0 * kappa * kappa / fac.dim * root_sum * root_sum;
}

double probe_kappa(const Payoff& g, const CovarianceSpec& spec, long probes,
                   RngStream& stream) {
  if (probes < 1)
    throw std::invalid_argument("probe_kappa: probes must be >= 1");
  if (g.dim != spec.dim)
    throw std::invalid_argument("probe_kappa: dimension mismatch");
  const int d = spec.dim;
  const FactorMatrix fac = cholesky_factor(spec);
  const Eigen::MatrixXd& a = fac.entries;

  double best_ratio = 0.0;
  const auto consider = [&best_ratio](double num, double den) {
    if (den > 0.0) best_ratio = std::max(best_ratio, num / den);
  };

  Eigen::VectorXd u(d), y(d), fresh(d), delta(d), y_prime(d);

  // Prefix-redraw couplings: Y and Y' share the last d - i input coordinates.
  for (int i : default_curve_indices(d)) {
    if (i == 0) continue;
    double num = 0.0, den = 0.0;
    for (long p = 0; p < probes; ++p) {
      for (int j = 0; j < d; ++j) u[j] = stream.gaussian();
      y.noalias() = a * u;
      for (int j = 0; j < i; ++j) fresh[j] = stream.gaussian();
      delta.head(i) = fresh.head(i) - u.head(i);
      y_prime = y;
      y_prime.noalias() += a.leftCols(i) * delta.head(i);
      const double dg = evaluate(g, y) - evaluate(g, y_prime);
      num += dg * dg;
      den += (y - y_prime).squaredNorm();
    }
    consider(num, den);
  }

  // Scaled couplings Y' = cY; Cov(Y') = c^2 M stays dominated by M.
  for (const double c : {0.0, 0.5, 0.9}) {
    double num = 0.0, den = 0.0;
    for (long p = 0; p < probes; ++p) {
      for (int j = 0; j < d; ++j) u[j] = stream.gaussian();
      y.noalias() = a * u;
      y_prime = c * y;
      const double dg = evaluate(g, y) - evaluate(g, y_prime);
      num += dg * dg;
      den += (y - y_prime).squaredNorm();
    }
    consider(num, den);
  }

  return std::sqrt(best_ratio);
}

double variance_rel_stderr(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 4)
    throw std::invalid_argument("variance_rel_stderr: need at least 4 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double c = v - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m4 /= n;
  const double s2 = m2 * n / (n - 1.0);
  if (s2 <= 0.0) return 0.0;
  const double var_of_s2 = (m4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n;
  return std::sqrt(std::max(var_of_s2, 0.0)) / s2;
}

BoundReport make_bound_report(const CovarianceSpec& spec,
                              const FactorMatrix& fac, const QSchedule& sched,
                              double kappa, KappaProvenance provenance,
                              const CouplingCurve* curve) {
  BoundReport report;
  report.dim = spec.dim;
  report.kappa = kappa;
  report.provenance = provenance;
  report.sigma_bound = kappa * kappa * spec.entries.trace();
  report.varfn_bound_factor = bound_factor_q(fac, kappa);

  if (fac.eigenvalues) {
    const double root_sum = fac.eigenvalues->cwiseSqrt().sum();
    report.varfn_bound_pca =
        2.0 * kappa * kappa / spec.dim * root_sum * root_sum;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        spec.entries, Eigen::EigenvaluesOnly);
    const double root_sum = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    report.varfn_bound_pca =
        2.0 * kappa * kappa / spec.dim * root_sum * root_sum;
  }

  report.varfn_bound_harmonic = kNan;
  report.harmonic_cap = kNan;
  report.generic_bound_eq6 = kNan;
  if (curve != nullptr && curve->full()) {
    const HarmonicBound harmonic = bound_harmonic(*curve);
    report.varfn_bound_harmonic = harmonic.value;
    report.harmonic_cap = harmonic.cap;
    report.generic_bound_eq6 = bound_eq6(*curve, sched);
  }
  report.fingerprint =
      hash_combine(fac.fingerprint_component(), sched.fingerprint_component());
  return report;
}

std::string bound_report_csv_header() {
  return "d,kappa,kappa_provenance,sigma_bound,varfn_bound_factor,"
         "varfn_bound_pca,varfn_bound_harmonic,harmonic_cap,"
         "generic_bound_eq6,seed,fingerprint";
}

std::string bound_report_csv_row(const BoundReport& report) {
  std::ostringstream os;
  os << report.dim << ',' << format_g17(report.kappa) << ','
     << (report.provenance == KappaProvenance::kSupplied ? "supplied"
                                                         : "probed")
     << ',' << format_g17(report.sigma_bound) << ','
     << format_g17(report.varfn_bound_factor) << ','
     << format_g17(report.varfn_bound_pca) << ','
     << format_g17(report.varfn_bound_harmonic) << ','
     << format_g17(report.harmonic_cap) << ','
     << format_g17(report.generic_bound_eq6) << ',' << report.seed << ','
     << std::hex << report.fingerprint;
  return os.str();
}

EfficiencyReport efficiency_report(const EstimatorResult& mc,
                                   const EstimatorResult& grdr) {
  if (mc.problem_fingerprint != grdr.problem_fingerprint)
    throw std::invalid_argument(
        "efficiency_report: results come from different problems "
        "(covariance/payoff fingerprints differ)");
  EfficiencyReport report;
  report.problem_fingerprint = mc.problem_fingerprint;
  report.variance_mc = mc.var_fn_hat;
  report.variance_grdr = grdr.var_fn_hat;
  report.variance_ratio = mc.var_fn_hat / grdr.var_fn_hat;
  report.ops_per_mc_sample = mc.mean_ops_per_replication;
  report.ops_per_grdr_chain = grdr.mean_ops_per_replication;
  report.tau_mc_coeff = mc.var_fn_hat * mc.mean_ops_per_replication;
  report.tau_grdr_coeff = grdr.var_fn_hat * grdr.mean_ops_per_replication;
  report.work_normalized_ratio = report.tau_mc_coeff / report.tau_grdr_coeff;
  report.mc_seed = mc.seed;
  report.grdr_seed = grdr.seed;
  return report;
}

std::string EfficiencyReport::to_json() const {
  nlohmann::ordered_json j;
  std::ostringstream fp;
  fp << std::hex << problem_fingerprint;
  j["problem_fingerprint"] = fp.str();
  j["variance_mc"] = variance_mc;
  j["variance_grdr"] = variance_grdr;
  j["variance_ratio"] = variance_ratio;
  j["ops_per_mc_sample"] = ops_per_mc_sample;
  j["ops_per_grdr_chain"] = ops_per_grdr_chain;
  j["work_normalized_ratio"] = work_normalized_ratio;
  j["tau_mc_coeff_per_eps2"] = tau_mc_coeff;
  j["tau_grdr_coeff_per_eps2"] = tau_grdr_coeff;
  j["mc_seed"] = mc_seed;
  j["grdr_seed"] = grdr_seed;
  return j.dump(2);
}

}  // namespace grdr
