#include "fdmopt/gp.hpp"

#include "fdmopt/error.hpp"

#include <Eigen/Cholesky>
#include <ceres/ceres.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fdmopt {

namespace {

const double kSqrt5 = std::sqrt(5.0);

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }
double logit(double s) { return std::log(s / (1.0 - s)); }

// Line-search warnings about flat interpolants are routine on plateaus of the
// likelihood; keep them off stderr.
void quiet_solver_logging() {
  static const bool once = [] {
    FLAGS_minloglevel = google::GLOG_ERROR;
    return true;
  }();
  (void)once;
}

// Squared coordinate differences for every pair, laid out [d][i * n + j].
struct PairTable {
  int n = 0;
  int d = 0;
  std::vector<Eigen::MatrixXd> diff2;
};

PairTable pair_table(const Eigen::MatrixXd& x) {
  PairTable t;
  t.n = static_cast<int>(x.rows());
  t.d = static_cast<int>(x.cols());
  t.diff2.assign(static_cast<std::size_t>(t.d), Eigen::MatrixXd::Zero(t.n, t.n));
  for (int k = 0; k < t.d; ++k) {
    auto& m = t.diff2[static_cast<std::size_t>(k)];
    for (int i = 0; i < t.n; ++i)
      for (int j = 0; j < i; ++j) {
        const double dv = x(i, k) - x(j, k);
        m(i, j) = m(j, i) = dv * dv;
      }
  }
  return t;
}

// Scaled squared distances r^2.
Eigen::MatrixXd scaled_r2(const PairTable& t, const Eigen::VectorXd& ls) {
  Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(t.n, t.n);
  for (int k = 0; k < t.d; ++k) r2 += t.diff2[static_cast<std::size_t>(k)] / (ls[k] * ls[k]);
  return r2;
}

// Factorises K + (noise + jitter) I with jitter escalating 0, 1e-8 ... 1e-4.
bool factorise(const Eigen::MatrixXd& k, double noise, Eigen::LLT<Eigen::MatrixXd>& llt, double& jitter) {
  const int n = static_cast<int>(k.rows());
  for (double j : {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4}) {
    llt.compute(k + (noise + j) * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      jitter = j;
      return true;
    }
  }
  return false;
}

struct Bounds {
  Eigen::VectorXd lo;  // log space
  Eigen::VectorXd hi;
};

Bounds make_bounds(int d, const SurrogateOptions& o) {
  Bounds b{Eigen::VectorXd(d + 2), Eigen::VectorXd(d + 2)};
  b.lo.head(d).setConstant(std::log(o.min_lengthscale));
  b.hi.head(d).setConstant(std::log(o.max_lengthscale));
  b.lo[d] = std::log(o.min_signal_variance);
  b.hi[d] = std::log(o.max_signal_variance);
  b.lo[d + 1] = std::log(o.min_noise_variance);
  b.hi[d + 1] = std::log(o.max_noise_variance);
  return b;
}

Hyperparameters from_unbounded(const double* z, const Bounds& b, Eigen::VectorXd* dtheta_dz = nullptr) {
  const int m = static_cast<int>(b.lo.size());
  const int d = m - 2;
  Eigen::VectorXd theta(m);
  if (dtheta_dz) dtheta_dz->resize(m);
  for (int i = 0; i < m; ++i) {
    const double s = sigmoid(z[i]);
    theta[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * s;
    if (dtheta_dz) (*dtheta_dz)[i] = (b.hi[i] - b.lo[i]) * s * (1.0 - s);
  }
  Hyperparameters h;
  h.lengthscales = theta.head(d).array().exp();
  h.signal_variance = std::exp(theta[d]);
  h.noise_variance = std::exp(theta[d + 1]);
  return h;
}

Eigen::VectorXd to_unbounded(const Hyperparameters& h, const Bounds& b) {
  const int m = static_cast<int>(b.lo.size());
  const int d = m - 2;
  Eigen::VectorXd theta(m);
  theta.head(d) = h.lengthscales.array().log();
  theta[d] = std::log(h.signal_variance);
  theta[d + 1] = std::log(h.noise_variance);
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) {
    const double s = std::clamp((theta[i] - b.lo[i]) / (b.hi[i] - b.lo[i]), 1e-6, 1.0 - 1e-6);
    z[i] = logit(s);
  }
  return z;
}

// Negative log marginal likelihood in log-hyperparameters, with gradient.
double nll(const PairTable& t, const Eigen::VectorXd& y, const Hyperparameters& h, Eigen::VectorXd* grad_theta) {
  const int n = t.n;
  const Eigen::MatrixXd r2 = scaled_r2(t, h.lengthscales);
  const Eigen::ArrayXXd r = r2.array().sqrt();
  const Eigen::ArrayXXd e = (-kSqrt5 * r).exp();
  const Eigen::MatrixXd k = (h.signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) * e).matrix();
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorise(k, h.noise_variance, llt, jitter)) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double value = 0.5 * y.dot(alpha) + 0.5 * logdet + 0.5 * n * std::log(2.0 * std::numbers::pi);
  if (grad_theta) {
    // dNLL/dtheta = 0.5 tr(W dK/dtheta), W = K^-1 - alpha alpha^T.
    const Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(n, n)) - alpha * alpha.transpose();
    const int d = t.d;
    grad_theta->resize(d + 2);
    const Eigen::ArrayXXd common = h.signal_variance * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e * w.array();
    for (int q = 0; q < d; ++q) {
      const double l2 = h.lengthscales[q] * h.lengthscales[q];
      (*grad_theta)[q] = 0.5 * (common * t.diff2[static_cast<std::size_t>(q)].array()).sum() / l2;
    }
    (*grad_theta)[d] = 0.5 * (w.array() * k.array()).sum();
    (*grad_theta)[d + 1] = 0.5 * h.noise_variance * w.trace();
  }
  return value;
}

class NllFunction final : public ceres::FirstOrderFunction {
 public:
  NllFunction(const PairTable& t, const Eigen::VectorXd& y, const Bounds& b) : t_(t), y_(y), b_(b) {}
  int NumParameters() const override { return static_cast<int>(b_.lo.size()); }
  bool Evaluate(const double* z, double* cost, double* gradient) const override {
    Eigen::VectorXd dtheta;
    const Hyperparameters h = from_unbounded(z, b_, &dtheta);
    Eigen::VectorXd g;
    const double v = nll(t_, y_, h, gradient ? &g : nullptr);
    if (!std::isfinite(v)) return false;
    *cost = v;
    if (gradient) {
      for (int i = 0; i < NumParameters(); ++i) gradient[i] = g[i] * dtheta[i];
    }
    return true;
  }

 private:
  const PairTable& t_;
  const Eigen::VectorXd& y_;
  const Bounds& b_;
};

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
}

}  // namespace

double matern52(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const Hyperparameters& h) {
  const double r2 = ((a - b).array() / h.lengthscales.array()).square().sum();
  const double r = std::sqrt(r2);
  return h.signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
}

SurrogateState condition_surrogate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparameters& h) {
  if (x.rows() < 2 || x.rows() != y.size()) throw ValidationError("surrogate needs at least 2 aligned observations");
  if (h.lengthscales.size() != x.cols()) throw DimensionError("one lengthscale per input dimension is required");
  SurrogateState s;
  s.x_ = x;
  s.y_ = y;
  s.h_ = h;
  s.y_mean_ = y.mean();
  const double var = (y.array() - s.y_mean_).square().sum() / static_cast<double>(y.size());
  s.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd ys = (y.array() - s.y_mean_) / s.y_scale_;
  const PairTable t = pair_table(x);
  const Eigen::MatrixXd r2 = scaled_r2(t, h.lengthscales);
  const Eigen::ArrayXXd r = r2.array().sqrt();
  const Eigen::MatrixXd k = (h.signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) * (-kSqrt5 * r).exp()).matrix();
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factorise(k, h.noise_variance, llt, s.jitter_)) {
    throw FitError("kernel matrix is not positive definite even with 1e-4 jitter");
  }
  s.chol_ = llt.matrixL();
  s.alpha_ = llt.solve(ys);
  s.lml_ = -nll(t, ys, h, nullptr);
  return s;
}

SurrogateState fit_surrogate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SurrogateOptions& o,
                             const Hyperparameters* warm) {
  if (x.rows() < 2 || x.rows() != y.size()) throw ValidationError("surrogate needs at least 2 aligned observations");
  const int d = static_cast<int>(x.cols());
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size());
  const Eigen::VectorXd ys = (y.array() - mean) / (var > 1e-24 ? std::sqrt(var) : 1.0);
  const PairTable table = pair_table(x);
  const Bounds bounds = make_bounds(d, o);

  std::vector<Hyperparameters> starts;
  if (warm && warm->lengthscales.size() == d) {
    starts.push_back(*warm);
  } else {
    starts.push_back({Eigen::VectorXd::Constant(d, 0.5), 1.0, 1e-2});
  }
  std::mt19937_64 rng(o.seed);
  while (static_cast<int>(starts.size()) < std::max(1, o.restarts)) {
    Hyperparameters h;
    h.lengthscales.resize(d);
    for (int i = 0; i < d; ++i) h.lengthscales[i] = log_uniform(rng, 0.1, 5.0);
    h.signal_variance = log_uniform(rng, 0.2, 5.0);
    h.noise_variance = log_uniform(rng, 1e-6, 1e-1);
    starts.push_back(std::move(h));
  }

  quiet_solver_logging();
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = o.max_iterations;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;
  options.function_tolerance = 1e-9;
  options.gradient_tolerance = 1e-8;

  double best_value = std::numeric_limits<double>::infinity();
  std::optional<Hyperparameters> best;
  for (const Hyperparameters& start : starts) {
    Eigen::VectorXd z = to_unbounded(start, bounds);
    ceres::GradientProblem problem(new NllFunction(table, ys, bounds));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, z.data(), &summary);
    const Hyperparameters h = from_unbounded(z.data(), bounds);
    const double v = nll(table, ys, h, nullptr);
    if (std::isfinite(v) && v < best_value) {
      best_value = v;
      best = h;
    }
  }
  if (!best) throw FitError("no restart produced a positive-definite kernel matrix");
  return condition_surrogate(x, y, *best);
}

void SurrogateState::predict(const Eigen::Ref<const Eigen::VectorXd>& x, double& mean, double& sd) const {
  Eigen::MatrixXd xs = x.transpose();
  Eigen::VectorXd m, s;
  predict(xs, m, s);
  mean = m[0];
  sd = s[0];
}

void SurrogateState::predict(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const {
  if (xs.cols() != x_.cols()) throw DimensionError("prediction inputs have the wrong dimension");
  const Eigen::Index m = xs.rows();
  const Eigen::Index n = x_.rows();
  const Eigen::ArrayXd inv_l2 = h_.lengthscales.array().square().inverse();
  Eigen::MatrixXd ks(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r2 = ((x_.row(i) - xs.row(j)).array().square() * inv_l2.transpose()).sum();
      const double r = std::sqrt(r2);
      ks(i, j) = h_.signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
    }
  }
  mean = (ks.transpose() * alpha_).array() * y_scale_ + y_mean_;
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  const Eigen::ArrayXd var = (h_.signal_variance - v.colwise().squaredNorm().array()).max(0.0);
  sd = var.sqrt() * y_scale_;
}

double expected_improvement(double mu, double sigma, double best) {
  const double gain = best - mu;
  if (!(sigma > 1e-12)) return std::max(gain, 0.0);
  const double z = gain / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, sigma * (z * cdf + pdf));
}

double guided_acquisition(double alpha, double violation, double eta) { return alpha * std::exp(-eta * violation); }

}  // namespace fdmopt
