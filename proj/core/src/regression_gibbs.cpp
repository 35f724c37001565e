#include "unishrink/regression_gibbs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "unishrink/errors.hpp"

namespace unishrink {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

RegressionData RegressionData::make(Matrix x, Vector y) {
  if (x.rows() < 1 || x.cols() < 1) throw InvalidSpec("regression needs n >= 1 and p >= 1");
  if (y.size() != x.rows()) throw InvalidSpec("y length does not match the rows of X");
  RegressionData data;
  data.xtx = x.transpose() * x;
  data.xty = x.transpose() * y;
  data.x = std::move(x);
  data.y = std::move(y);
  for (Eigen::Index j = 0; j < data.xtx.rows(); ++j) {
    if (!(data.xtx(j, j) > 0.0)) throw InvalidSpec("design matrix has an all-zero column");
  }
  return data;
}

double residual_sum_of_squares(const RegressionData& data, const Vector& beta) {
  return (data.y - data.x * beta).squaredNorm();
}

RegressionSampler::RegressionSampler(const RegressionData& data, PriorSpec spec,
                                     TauHyperPrior hyper)
    : data_(data), spec_(spec), hyper_(hyper) {
  validate(hyper_, spec_);
}

RegressionState RegressionSampler::initial_state(Rng& rng) const {
  const auto p = static_cast<Eigen::Index>(data_.p());
  RegressionState state;
  state.beta = Vector::Zero(p);
  state.sigma2 = data_.y.squaredNorm() / static_cast<double>(data_.n());
  if (!(state.sigma2 > 0.0)) state.sigma2 = 1.0;
  state.tau = initial_tau(hyper_, spec_);
  state.t = Vector::Constant(p, kInf);
  sample_tau_and_scales(state, rng);
  return state;
}

void RegressionSampler::sample_beta(RegressionState& state, Rng& rng) {
  const double sigma = std::sqrt(state.sigma2);
  const auto p = state.beta.size();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double xjj = data_.xtx(j, j);
    const double partial = data_.xty(j) - data_.xtx.row(j).dot(state.beta) + xjj * state.beta(j);
    const double half = sigma * state.tau * state.t(j);
    state.beta(j) = truncated_normal(partial / xjj, state.sigma2 / xjj,
                                     IntervalSet(Interval{-half, half}), rng, &counters_);
  }
}

void RegressionSampler::sample_sigma2(RegressionState& state, Rng& rng) {
  const double rss = residual_sum_of_squares(data_, state.beta);
  if (!(rss > 0.0)) {
    throw NumericalFailure("residual sum of squares is zero; the variance conditional is improper");
  }
  // |β_j| < σ τ t_j bounds the precision 1/σ² from above.
  double upper = kInf;
  for (Eigen::Index j = 0; j < state.beta.size(); ++j) {
    const double b = std::abs(state.beta(j));
    if (b == 0.0) continue;
    const double r = state.tau * state.t(j) / b;
    upper = std::min(upper, r * r);
  }
  const double shape = 0.5 * static_cast<double>(data_.n() + data_.p());
  const double precision =
      truncated_gamma(shape, 0.5 * rss, Interval{0.0, upper}, rng, &counters_);
  if (!(precision > 0.0)) throw NumericalFailure("variance draw overflowed");
  state.sigma2 = 1.0 / precision;
}

void RegressionSampler::sample_tau_and_scales(RegressionState& state, Rng& rng) const {
  const double sigma = std::sqrt(state.sigma2);
  const auto p = state.beta.size();
  if (!is_fixed(hyper_)) {
    std::vector<double> dev(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) dev[static_cast<std::size_t>(j)] = state.beta(j) / sigma;
    state.tau = sample_tau(hyper_, spec_, dev, static_cast<std::size_t>(p), state.tau, rng);
  } else {
    state.tau = initial_tau(hyper_, spec_);
  }
  const PriorSpec unit = spec_.with_tau(1.0);
  for (Eigen::Index j = 0; j < p; ++j) {
    state.t(j) = sample_latent_scale(unit, state.beta(j) / (sigma * state.tau), rng);
  }
}

void RegressionSampler::sweep(RegressionState& state, Rng& rng) {
  sample_beta(state, rng);
  sample_sigma2(state, rng);
  sample_tau_and_scales(state, rng);
}

void RegressionSettings::validate() const {
  if (iters == 0) throw ConfigError("iters must be positive");
  if (iters <= burnin) throw ConfigError("iters must exceed burnin");
  if (thin == 0) throw ConfigError("thin must be positive");
}

RegressionResult run_regression_chain(const RegressionData& data, const PriorSpec& spec,
                                      const TauHyperPrior& hyper,
                                      const RegressionSettings& settings) {
  settings.validate();
  const auto started = std::chrono::steady_clock::now();
  RegressionSampler sampler(data, spec, hyper);
  Rng rng = make_stream(settings.seed);
  RegressionState state = sampler.initial_state(rng);

  RegressionResult result;
  result.mean_beta = Vector::Zero(static_cast<Eigen::Index>(data.p()));
  for (std::size_t k = 1; k <= settings.iters; ++k) {
    sampler.sweep(state, rng);
    if (k <= settings.burnin || (k - settings.burnin) % settings.thin != 0) continue;
    result.mean_beta += state.beta;
    result.mean_sigma2 += state.sigma2;
    ++result.kept;
    if (settings.store_draws) {
      result.beta_draws.push_back(state.beta);
      result.sigma2_draws.push_back(state.sigma2);
      result.tau_draws.push_back(state.tau);
    }
  }
  result.mean_beta /= static_cast<double>(result.kept);
  result.mean_sigma2 /= static_cast<double>(result.kept);
  result.counters = sampler.counters();
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (result.counters.fallback_rate() > settings.max_fallback_rate) {
    std::ostringstream msg;
    msg << "underflow fallbacks " << result.counters.fallbacks << " of " << result.counters.draws
        << " draws exceed the tolerated rate " << settings.max_fallback_rate;
    throw NumericalFailure(msg.str());
  }
  return result;
}

double model_error(const Vector& beta_hat, const Vector& beta, const Matrix& sigma_x) {
  if (beta_hat.size() != beta.size() || sigma_x.rows() != beta.size() ||
      sigma_x.cols() != beta.size()) {
    throw InvalidSpec("model_error: dimension mismatch");
  }
  const Vector d = beta_hat - beta;
  return d.dot(sigma_x * d);
}

Matrix design_covariance(DesignScenario scenario, std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  if (scenario == DesignScenario::Independent) return Matrix::Identity(n, n);
  Matrix s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) s(i, j) = std::pow(0.5, std::abs(i - j));
  }
  return s;
}

Vector beta_configuration(int which) {
  Vector beta = Vector::Zero(20);
  switch (which) {
    case 1: beta.head(5).setConstant(1.0); break;
    case 2: beta.head(5).setConstant(3.0); break;
    case 3: beta.segment(0, 5).setConstant(1.0); beta.segment(10, 5).setConstant(1.0); break;
    case 4: beta.segment(0, 5).setConstant(3.0); beta.segment(10, 5).setConstant(3.0); break;
    case 5: beta.setConstant(0.85); break;
    default: throw InvalidSpec("beta configuration must be 1..5");
  }
  return beta;
}

SimulatedRegression simulate_regression(DesignScenario scenario, const Vector& beta,
                                        std::size_t n, double noise_sd, Rng& rng) {
  if (n == 0) throw InvalidSpec("simulate_regression: n must be positive");
  if (!(noise_sd > 0.0)) throw InvalidSpec("simulate_regression: noise sd must be positive");
  const auto p = beta.size();
  const auto rows = static_cast<Eigen::Index>(n);
  Matrix sigma_x = design_covariance(scenario, static_cast<std::size_t>(p));
  const Matrix lower = cholesky(sigma_x);
  Matrix z(p, rows);
  for (Eigen::Index c = 0; c < rows; ++c) {
    for (Eigen::Index r = 0; r < p; ++r) z(r, c) = standard_normal(rng);
  }
  Matrix x = (lower * z).transpose();
  Vector y = x * beta;
  for (Eigen::Index i = 0; i < rows; ++i) y(i) += noise_sd * standard_normal(rng);
  return {RegressionData::make(std::move(x), std::move(y)), beta, std::move(sigma_x)};
}

}  // namespace unishrink
