#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "grdr/covariance.hpp"

namespace grdr {

enum class PayoffKind { kConstant, kLinear, kBasketCall };

/// The integrand g. Evaluation is pure, total on finite inputs, and O(d).
///
/// BasketCall is the arithmetic-average call on d lognormal assets with
/// unit spot: g(x) = ((1/d) sum_i exp(-sigma_i^2 t / 2 + sigma_i sqrt(t) x_i)
/// - K e^{-rt})^+.
struct Payoff {
  PayoffKind kind = PayoffKind::kConstant;
  int dim = 0;

  double constant_value = 0.0;   // kConstant
  Eigen::VectorXd linear_coeffs; // kLinear: g(x) = a . x

  Eigen::VectorXd sigmas;        // kBasketCall: per-asset volatilities
  double rate = 0.0;             // r, per year
  double maturity = 0.0;         // t, years
  double strike = 0.0;           // K

  static Payoff constant(int d, double c);
  static Payoff linear(Eigen::VectorXd a);
  static Payoff basket_call(Eigen::VectorXd sigmas, double rate,
                            double maturity, double strike);

  std::string label() const;
  std::uint64_t fingerprint_component() const;
};

double evaluate(const Payoff& p, const Eigen::VectorXd& x);

/// evaluate() with an exact tally of the arithmetic operations performed,
/// for the O(d) cost-contract check.
double evaluate_counted(const Payoff& p, const Eigen::VectorXd& x,
                        std::uint64_t& ops);

/// Closed-form E(g(X)), X ~ N(0, M), where one exists: constants, centered
/// linear forms (0), and the d = 1 basket call (Black-Scholes).
std::optional<double> analytic_mean(const Payoff& p,
                                    const CovarianceSpec& spec);

/// Var(a^T X) = a^T M a.
double analytic_variance_linear(const Eigen::VectorXd& a,
                                const CovarianceSpec& spec);

/// Standard normal CDF.
double norm_cdf(double x);

}  // namespace grdr
