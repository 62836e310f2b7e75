#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>

namespace fdmopt {

/// Kernel hyperparameters in natural units; targets are standardised before
/// fitting so the variances are relative to a unit-variance signal.
struct Hyperparameters {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-4;
};

struct SurrogateOptions {
  int restarts = 5;
  std::uint64_t seed = 0;
  int max_iterations = 60;
  double min_lengthscale = 0.05;
  double max_lengthscale = 20.0;
  double min_signal_variance = 1e-3;
  double max_signal_variance = 50.0;
  double min_noise_variance = 1e-8;
  double max_noise_variance = 1.0;
};

/// Matern 5/2 ARD kernel value between two inputs.
double matern52(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const Hyperparameters& h);

/// Fitted Gaussian-process regressor (zero prior mean on standardised targets).
class SurrogateState {
 public:
  const Eigen::MatrixXd& inputs() const { return x_; }  // one row per observation
  const Eigen::VectorXd& targets() const { return y_; }
  const Hyperparameters& hyperparameters() const { return h_; }
  double jitter() const { return jitter_; }
  double log_marginal_likelihood() const { return lml_; }

  /// Posterior mean and latent standard deviation in target units.
  void predict(const Eigen::Ref<const Eigen::VectorXd>& x, double& mean, double& sd) const;
  void predict(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const;

 private:
  friend SurrogateState fit_surrogate(const Eigen::MatrixXd&, const Eigen::VectorXd&, const SurrogateOptions&,
                                      const Hyperparameters*);
  friend SurrogateState condition_surrogate(const Eigen::MatrixXd&, const Eigen::VectorXd&, const Hyperparameters&);
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  Hyperparameters h_;
  double jitter_ = 0.0;
  double lml_ = 0.0;
  Eigen::MatrixXd chol_;  // lower factor of K + (noise + jitter) I
  Eigen::VectorXd alpha_;
};

/// Maximises the log marginal likelihood from a default start (or `warm`,
/// when given) plus restarts-1 draws from a generator seeded with
/// options.seed. Throws ValidationError with fewer than 2 observations and
/// FitError when no start yields a factorisable kernel.
SurrogateState fit_surrogate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SurrogateOptions& options = {},
                             const Hyperparameters* warm = nullptr);

/// Conditions on data with fixed hyperparameters (no optimisation).
SurrogateState condition_surrogate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparameters& h);

/// Expected improvement for minimisation: sigma (z Phi(z) + phi(z)),
/// z = (best - mu) / sigma; max(best - mu, 0) when sigma vanishes.
double expected_improvement(double mu, double sigma, double best);

/// alpha * exp(-eta * V).
double guided_acquisition(double alpha, double violation, double eta);

}  // namespace fdmopt
