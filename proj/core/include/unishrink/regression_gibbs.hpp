#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "unishrink/linalg.hpp"
#include "unishrink/priors.hpp"
#include "unishrink/random.hpp"
#include "unishrink/truncated.hpp"

namespace unishrink {

/// Linear model y = Xβ + ε with the cross products cached.
struct RegressionData {
  Matrix x;  ///< n x p
  Vector y;  ///< n
  Matrix xtx;
  Vector xty;

  static RegressionData make(Matrix x, Vector y);
  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x.cols()); }
};

/// Invariant: |β_j| < σ τ t_j for every j.
struct RegressionState {
  Vector beta;
  double sigma2 = 1.0;
  double tau = 1.0;
  Vector t;
};

double residual_sum_of_squares(const RegressionData& data, const Vector& beta);

/// Gibbs sampler for β with β_j / σ drawn from a scale mixture of uniforms
/// and p(σ²) ∝ 1/σ². One sweep updates β (ascending j), σ², τ with the
/// scales integrated out, then the scales.
class RegressionSampler {
 public:
  RegressionSampler(const RegressionData& data, PriorSpec spec, TauHyperPrior hyper);

  RegressionState initial_state(Rng& rng) const;

  void sample_beta(RegressionState& state, Rng& rng);
  void sample_sigma2(RegressionState& state, Rng& rng);
  void sample_tau_and_scales(RegressionState& state, Rng& rng) const;
  void sweep(RegressionState& state, Rng& rng);

  const SamplerCounters& counters() const noexcept { return counters_; }

 private:
  const RegressionData& data_;
  PriorSpec spec_;
  TauHyperPrior hyper_;
  SamplerCounters counters_;
};

struct RegressionSettings {
  std::size_t iters = 15000;
  std::size_t burnin = 5000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  bool store_draws = true;
  double max_fallback_rate = 1e-3;

  void validate() const;
};

struct RegressionResult {
  std::size_t kept = 0;
  std::vector<Vector> beta_draws;
  std::vector<double> sigma2_draws;
  std::vector<double> tau_draws;
  Vector mean_beta;
  double mean_sigma2 = 0.0;
  SamplerCounters counters;
  double runtime_seconds = 0.0;
};

RegressionResult run_regression_chain(const RegressionData& data, const PriorSpec& spec,
                                      const TauHyperPrior& hyper,
                                      const RegressionSettings& settings);

/// (β̂ - β)ᵀ Σ_X (β̂ - β).
double model_error(const Vector& beta_hat, const Vector& beta, const Matrix& sigma_x);

/// Simulation design for shrinkage regression: iid standard normal predictors
/// or an AR(1) correlation of 0.5.
enum class DesignScenario { Independent, Correlated };

Matrix design_covariance(DesignScenario scenario, std::size_t p);

/// Coefficient configurations 1..5 (p = 20):
/// 1: five ones then zeros; 2: five threes then zeros;
/// 3: ones on positions 1-5 and 11-15; 4: threes on the same positions;
/// 5: all 0.85.
Vector beta_configuration(int which);

struct SimulatedRegression {
  RegressionData data;
  Vector beta;
  Matrix sigma_x;
};

SimulatedRegression simulate_regression(DesignScenario scenario, const Vector& beta,
                                        std::size_t n, double noise_sd, Rng& rng);

}  // namespace unishrink
