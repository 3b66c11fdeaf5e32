#include "grdr/payoff.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "grdr/util.hpp"

namespace grdr {

Payoff Payoff::constant(int d, double c) {
  if (d < 1) throw std::invalid_argument("Payoff::constant: d must be >= 1");
  Payoff p;
  p.kind = PayoffKind::kConstant;
  p.dim = d;
  p.constant_value = c;
  return p;
}

Payoff Payoff::linear(Eigen::VectorXd a) {
  if (a.size() < 1)
    throw std::invalid_argument("Payoff::linear: a must be nonempty");
  Payoff p;
  p.kind = PayoffKind::kLinear;
  p.dim = static_cast<int>(a.size());
  p.linear_coeffs = std::move(a);
  return p;
}

Payoff Payoff::basket_call(Eigen::VectorXd sigmas, double rate,
                           double maturity, double strike) {
  if (sigmas.size() < 1)
    throw std::invalid_argument("Payoff::basket_call: sigmas must be nonempty");
  if (maturity < 0.0)
    throw std::invalid_argument("Payoff::basket_call: maturity must be >= 0");
  Payoff p;
  p.kind = PayoffKind::kBasketCall;
  p.dim = static_cast<int>(sigmas.size());
  p.sigmas = std::move(sigmas);
  p.rate = rate;
  p.maturity = maturity;
  p.strike = strike;
  return p;
}

std::string Payoff::label() const {
  std::ostringstream os;
  switch (kind) {
    case PayoffKind::kConstant:
      os << "constant(" << format_g17(constant_value) << ")";
      break;
    case PayoffKind::kLinear:
      os << "linear(d=" << dim << ";hash=" << std::hex
         << hash_bytes(linear_coeffs.data(), sizeof(double) * dim) << ")";
      break;
    case PayoffKind::kBasketCall:
      os << "basket(d=" << dim << ";r=" << format_g17(rate)
         << ";t=" << format_g17(maturity) << ";K=" << format_g17(strike)
         << ";sighash=" << std::hex
         << hash_bytes(sigmas.data(), sizeof(double) * dim) << ")";
      break;
  }
  return os.str();
}

std::uint64_t Payoff::fingerprint_component() const {
  return hash_string(label());
}

double evaluate(const Payoff& p, const Eigen::VectorXd& x) {
  std::uint64_t ops = 0;
  return evaluate_counted(p, x, ops);
}

double evaluate_counted(const Payoff& p, const Eigen::VectorXd& x,
                        std::uint64_t& ops) {
  if (x.size() != p.dim)
    throw std::invalid_argument("evaluate: dimension mismatch");
  switch (p.kind) {
    case PayoffKind::kConstant:
      ops += 1;
      return p.constant_value;
    case PayoffKind::kLinear:
      ops += 2 * static_cast<std::uint64_t>(p.dim);
      return p.linear_coeffs.dot(x);
    case PayoffKind::kBasketCall: {
      const double sqrt_t = std::sqrt(p.maturity);
      double sum = 0.0;
      for (int i = 0; i < p.dim; ++i) {
        const double s = p.sigmas[i];
        sum += std::exp(-0.5 * s * s * p.maturity + s * sqrt_t * x[i]);
      }
      ops += 6 * static_cast<std::uint64_t>(p.dim) + 4;
      const double value =
          sum / p.dim - p.strike * std::exp(-p.rate * p.maturity);
      return value > 0.0 ? value : 0.0;
    }
  }
  throw std::logic_error("evaluate: unknown payoff kind");
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::optional<double> analytic_mean(const Payoff& p,
                                    const CovarianceSpec& spec) {
  if (spec.dim != p.dim)
    throw std::invalid_argument("analytic_mean: dimension mismatch");
  switch (p.kind) {
    case PayoffKind::kConstant:
      return p.constant_value;
    case PayoffKind::kLinear:
      return 0.0;  // E(a^T X) = 0 for centered X
    case PayoffKind::kBasketCall: {
      if (p.dim != 1) return std::nullopt;
      const double m = spec.entries(0, 0);  // Var(X_1)
      const double sigma = p.sigmas[0];
      const double t = p.maturity;
      const double discounted_strike = p.strike * std::exp(-p.rate * t);
      // exp(-sigma^2 t/2 + sigma sqrt(t) X) is lognormal with mean
      // `forward` and log-standard-deviation `s`; for M = [[1]] this is the
      // unit-forward Black-Scholes case.
      const double forward =
          std::exp(-0.5 * sigma * sigma * t + 0.5 * sigma * sigma * t * m);
      const double s = sigma * std::sqrt(t * m);
      if (discounted_strike <= 0.0) return forward - discounted_strike;
      if (s == 0.0) return std::max(forward - discounted_strike, 0.0);
      const double d1 = (std::log(forward / discounted_strike) + 0.5 * s * s) / s;
      return forward * norm_cdf(d1) - discounted_strike * norm_cdf(d1 - s);
    }
  }
  return std::nullopt;
}

double analytic_variance_linear(const Eigen::VectorXd& a,
                                const CovarianceSpec& spec) {
  if (a.size() != spec.dim)
    throw std::invalid_argument("analytic_variance_linear: dimension mismatch");
  return a.dot(spec.entries * a);
}

}  // namespace grdr
