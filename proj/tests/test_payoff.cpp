#include "doctest.h"

#include <cmath>

#include "grdr/covariance.hpp"
#include "grdr/payoff.hpp"
#include "grdr/rng.hpp"

using namespace grdr;

namespace {

// Independent oracle for the d = 1 basket mean: composite Simpson
// integration of g(x) phi(x) from the payoff kink upward (the integrand
// vanishes below it).
double basket_mean_by_quadrature(double sigma, double t, double r, double k) {
  const double discounted_strike = k * std::exp(-r * t);
  const double vol = sigma * std::sqrt(t);
  double lower = -14.0;
  if (discounted_strike > 0.0 && vol > 0.0)
    lower = (std::log(discounted_strike) + 0.5 * sigma * sigma * t) / vol;
  const double upper = std::max(lower + 1.0, 14.0);
  const auto integrand = [&](double x) {
    const double avg = std::exp(-0.5 * sigma * sigma * t + vol * x);
    const double payoff = avg - discounted_strike;
    const double phi =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
    return payoff > 0.0 ? payoff * phi : 0.0;
  };
  const long intervals = 400000;  // even
  const double h = (upper - lower) / intervals;
  double sum = integrand(lower) + integrand(upper);
  for (long i = 1; i < intervals; ++i)
    sum += integrand(lower + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("evaluate: linear dot product") {
  const Payoff p = Payoff::linear((Eigen::VectorXd(2) << 1.0, 1.0).finished());
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.3, -0.2).finished();
  CHECK(evaluate(p, x) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("evaluate: degenerate basket with zero volatility and strike") {
  const Payoff p =
      Payoff::basket_call(Eigen::VectorXd::Zero(1), 0.0, 1.0, 0.0);
  CHECK(evaluate(p, Eigen::VectorXd::Constant(1, 3.7)) == 1.0);
  CHECK(evaluate(p, Eigen::VectorXd::Constant(1, -3.7)) == 1.0);
}

TEST_CASE("evaluate: two-asset basket at the origin") {
  const Payoff p = Payoff::basket_call(Eigen::VectorXd::Constant(2, 0.2), 0.0,
                                       1.0, 0.5);
  const double expected = std::exp(-0.02) - 0.5;
  CHECK(evaluate(p, Eigen::VectorXd::Zero(2)) ==
        doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(0.480198673).epsilon(1e-9));
}

TEST_CASE("evaluate: basket output is nonnegative") {
  const Payoff p = Payoff::basket_call(Eigen::VectorXd::Constant(3, 0.4), 0.05,
                                       2.0, 10.0);
  RngStream stream(5, 0);
  for (int i = 0; i < 200; ++i) {
    CHECK(evaluate(p, standard_normal_vec(stream, 3)) >= 0.0);
  }
}

TEST_CASE("analytic_mean: constant and linear") {
  const CovarianceSpec spec = make_equicorrelation(3, 0.2);
  CHECK(*analytic_mean(Payoff::constant(3, 3.0), spec) == 3.0);
  CHECK(*analytic_mean(Payoff::linear(Eigen::VectorXd::Ones(3)), spec) == 0.0);
}

TEST_CASE("analytic_mean: d = 1 basket equals Black-Scholes") {
  const CovarianceSpec unit = make_equicorrelation(1, 0.0);
  const Payoff p =
      Payoff::basket_call(Eigen::VectorXd::Constant(1, 0.2), 0.0, 1.0, 1.0);
  const double bs = *analytic_mean(p, unit);
  // 2 Phi(0.1) - 1 with d+- = +-0.1
  CHECK(bs == doctest::Approx(2.0 * norm_cdf(0.1) - 1.0).epsilon(1e-15));
  CHECK(bs == doctest::Approx(0.0796557).epsilon(1e-6));
  CHECK(bs == doctest::Approx(basket_mean_by_quadrature(0.2, 1.0, 0.0, 1.0))
                  .epsilon(1e-9));
}

TEST_CASE("analytic_mean: quadrature agreement across parameters") {
  const CovarianceSpec unit = make_equicorrelation(1, 0.0);
  for (const auto& [sigma, t, r, k] :
       {std::tuple{0.3, 2.0, 0.05, 1.2}, std::tuple{0.1, 0.5, 0.0, 0.8},
        std::tuple{0.5, 1.0, 0.02, 1.0}}) {
    const Payoff p =
        Payoff::basket_call(Eigen::VectorXd::Constant(1, sigma), r, t, k);
    CHECK(*analytic_mean(p, unit) ==
          doctest::Approx(basket_mean_by_quadrature(sigma, t, r, k))
              .epsilon(1e-8));
  }
}

TEST_CASE("analytic_mean: absent for multi-asset baskets") {
  const CovarianceSpec spec = make_equicorrelation(2, 0.1);
  const Payoff p =
      Payoff::basket_call(Eigen::VectorXd::Constant(2, 0.2), 0.0, 1.0, 1.0);
  CHECK(!analytic_mean(p, spec).has_value());
}

TEST_CASE("analytic_variance_linear examples") {
  {
    Eigen::MatrixXd m(1, 1);
    m << 2.0;
    CHECK(analytic_variance_linear(Eigen::VectorXd::Ones(1),
                                   make_explicit(m)) == 2.0);
  }
  CHECK(analytic_variance_linear(Eigen::VectorXd::Ones(2),
                                 make_equicorrelation(2, 0.0)) == 2.0);
  {
    Eigen::MatrixXd m(2, 2);
    m << 2.0, 1.0, 1.0, 2.0;
    CHECK(analytic_variance_linear(Eigen::VectorXd::Ones(2),
                                   make_explicit(m)) == 6.0);
  }
}

TEST_CASE("basket is 1-Lipschitz in the stock average and monotone in x") {
  const int d = 4;
  const Payoff p = Payoff::basket_call(Eigen::VectorXd::Constant(d, 0.25), 0.0,
                                       1.0, 1.0);
  RngStream stream(17, 0);
  const double sqrt_t = 1.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::VectorXd x = standard_normal_vec(stream, d);
    const Eigen::VectorXd y = standard_normal_vec(stream, d);
    const auto average = [&](const Eigen::VectorXd& z) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i)
        acc += std::exp(-0.5 * 0.25 * 0.25 + 0.25 * sqrt_t * z[i]);
      return acc / d;
    };
    CHECK(std::abs(evaluate(p, x) - evaluate(p, y)) <=
          std::abs(average(x) - average(y)) + 1e-15);

    // Coordinate-wise monotone: bumping any x_i never decreases the payoff.
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd bumped = x;
      bumped[i] += 0.5;
      CHECK(evaluate(p, bumped) >= evaluate(p, x));
    }
  }
}

TEST_CASE("evaluation cost grows linearly in d") {
  std::vector<double> per_coordinate;
  for (int d = 16; d <= 1024; d *= 2) {
    const Payoff p =
        Payoff::basket_call(Eigen::VectorXd::Constant(d, 0.2), 0.0, 1.0, 1.0);
    std::uint64_t ops = 0;
    evaluate_counted(p, Eigen::VectorXd::Zero(d), ops);
    per_coordinate.push_back(static_cast<double>(ops) / d);
    const Payoff lin = Payoff::linear(Eigen::VectorXd::Ones(d));
    std::uint64_t lin_ops = 0;
    evaluate_counted(lin, Eigen::VectorXd::Zero(d), lin_ops);
    CHECK(lin_ops == 2 * static_cast<std::uint64_t>(d));
  }
  for (std::size_t i = 1; i < per_coordinate.size(); ++i)
    CHECK(per_coordinate[i] <=
          per_coordinate.front() * 1.05);  // flat per-coordinate cost
}
