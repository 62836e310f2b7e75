#include "fdmopt/error.hpp"
#include "fdmopt/gp.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fdmopt;

namespace {

Eigen::MatrixXd uniform_points(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = u(rng);
  return x;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("expected improvement closed form and limits") {
  CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(0.39894).epsilon(1e-5));
  CHECK(expected_improvement(0.8, 0.0, 1.0) == doctest::Approx(0.2));
  CHECK(expected_improvement(1.2, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(5.0, 1.0, 0.0) >= 0.0);
}

TEST_CASE("expected improvement agrees with a Monte Carlo estimate") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(1.0, 0.5);
  double sum = 0.0;
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) sum += std::max(0.8 - n(rng), 0.0);
  CHECK(std::abs(expected_improvement(1.0, 0.5, 0.8) - sum / draws) < 1e-3);
}

TEST_CASE("guided acquisition") {
  CHECK(guided_acquisition(0.5, 0.5, 2.0) == doctest::Approx(0.5 * std::exp(-1.0)));
  CHECK(guided_acquisition(0.5, 0.5, 2.0) == doctest::Approx(0.18394).epsilon(1e-4));
  CHECK(guided_acquisition(0.7, 0.0, 4.0) == 0.7);
  CHECK(guided_acquisition(0.0, 0.3, 4.0) == 0.0);
  CHECK(guided_acquisition(0.7, 0.3, 0.0) == 0.7);
  CHECK(guided_acquisition(0.7, 0.3, 4.0) < 0.7);
}

TEST_CASE("Matern 5/2 kernel") {
  Hyperparameters h;
  h.lengthscales = Eigen::VectorXd::Constant(2, 1.0);
  h.signal_variance = 2.0;
  const Eigen::Vector2d a(0, 0), b(1, 0);
  CHECK(matern52(a, a, h) == doctest::Approx(2.0));
  const double r = std::sqrt(5.0);
  CHECK(matern52(a, b, h) == doctest::Approx(2.0 * (1 + r + 5.0 / 3.0) * std::exp(-r)));
}

TEST_CASE("fit requires two observations and tolerates duplicates") {
  CHECK_THROWS_AS(fit_surrogate(Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1)), ValidationError);
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 3, 0.5);
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  const SurrogateState s = fit_surrogate(x, y);
  CHECK(s.hyperparameters().noise_variance >= 1e-8);
  double mu, sd;
  s.predict(x.row(0).transpose(), mu, sd);
  CHECK(mu == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("posterior mean learns a linear function from 40 points") {
  const Eigen::MatrixXd x = uniform_points(40, 5, 1);
  const Eigen::VectorXd y = x.rowwise().sum();
  const SurrogateState s = fit_surrogate(x, y);
  const Eigen::MatrixXd held = uniform_points(200, 5, 2);
  Eigen::VectorXd mu, sd;
  s.predict(held, mu, sd);
  const double rms = std::sqrt((mu - held.rowwise().sum()).squaredNorm() / 200.0);
  CHECK(rms < 0.05);
  for (int i = 0; i < x.cols(); ++i) CHECK(s.hyperparameters().lengthscales[i] > 0.0);
}

TEST_CASE("fit is deterministic for a fixed seed") {
  const Eigen::MatrixXd x = uniform_points(25, 4, 7);
  Eigen::VectorXd y(25);
  for (int i = 0; i < 25; ++i) y[i] = std::sin(3 * x(i, 0)) + x(i, 1) * x(i, 2);
  SurrogateOptions o;
  o.seed = 11;
  const SurrogateState a = fit_surrogate(x, y, o);
  const SurrogateState b = fit_surrogate(x, y, o);
  CHECK(a.hyperparameters().lengthscales == b.hyperparameters().lengthscales);
  CHECK(a.hyperparameters().signal_variance == b.hyperparameters().signal_variance);
  CHECK(a.hyperparameters().noise_variance == b.hyperparameters().noise_variance);
  CHECK(a.log_marginal_likelihood() == b.log_marginal_likelihood());
}

TEST_CASE("posterior mean interpolates training targets within three noise deviations") {
  const Eigen::MatrixXd x = uniform_points(30, 3, 5);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = std::cos(2 * x(i, 0)) - x(i, 2);
  const SurrogateState s = fit_surrogate(x, y);
  // Noise is fitted on standardised targets; convert back with the sample spread.
  const double spread = std::sqrt((y.array() - y.mean()).square().sum() / (y.size() - 1));
  const double noise_sd = std::sqrt(s.hyperparameters().noise_variance + s.jitter()) * spread;
  Eigen::VectorXd mu, sd;
  s.predict(x, mu, sd);
  for (int i = 0; i < 30; ++i) CHECK(std::abs(mu[i] - y[i]) <= 3.0 * noise_sd + 1e-6);
}

TEST_CASE("conditioning with fixed hyperparameters scales with the targets") {
  const Eigen::MatrixXd x = uniform_points(12, 2, 3);
  const Eigen::VectorXd y = x.col(0) - 2.0 * x.col(1);
  Hyperparameters h;
  h.lengthscales = Eigen::VectorXd::Constant(2, 0.7);
  const SurrogateState a = condition_surrogate(x, y, h);
  const SurrogateState b = condition_surrogate(x, 3.0 * y, h);
  const Eigen::Vector2d p(0.3, 0.6);
  double ma, sa, mb, sb;
  a.predict(p, ma, sa);
  b.predict(p, mb, sb);
  CHECK(mb == doctest::Approx(3.0 * ma));
  CHECK(sb == doctest::Approx(3.0 * sa));
}

}  // TEST_SUITE
