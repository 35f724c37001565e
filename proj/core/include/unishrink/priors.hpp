#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "unishrink/random.hpp"

namespace unishrink {

enum class PriorFamily { ExponentialPower, StudentT, GeneralizedDoublePareto, Logarithmic };

/// A symmetric unimodal shrinkage density g((ω - m) / τ) written as a scale
/// mixture of uniforms.
///
/// The shape parameter is q for the exponential power family, ν for Student-t
/// and α for the generalized double Pareto; the logarithmic family has none.
class PriorSpec {
 public:
  static PriorSpec exponential_power(double q, double tau = 1.0);
  static PriorSpec student_t(double nu, double tau = 1.0);
  static PriorSpec generalized_double_pareto(double alpha, double tau = 1.0);
  static PriorSpec logarithmic(double tau = 1.0);

  PriorFamily family() const noexcept { return family_; }
  double shape() const noexcept { return shape_; }
  double tau() const noexcept { return tau_; }

  /// Same family, different scale.
  PriorSpec with_tau(double tau) const;

  /// Config name: "ep", "student_t", "gdp" or "log".
  std::string_view name() const noexcept;
  /// Short display label, e.g. "ep_q=0.2".
  std::string label() const;

 private:
  PriorSpec(PriorFamily family, double shape, double tau);
  PriorFamily family_;
  double shape_;
  double tau_;
};

/// Unnormalized log π(θ). Throws DomainError at θ = 0 for the logarithmic
/// family (infinite spike).
double log_density(const PriorSpec& spec, double theta);

/// Unnormalized log h(t) of the uniform mixing density, t > 0.
double mixing_log_density(const PriorSpec& spec, double t);

/// F(t | θ) = (π(|θ|) - π(t)) / π(|θ|) for t ≥ |θ|, zero below.
/// At θ = 0 under the logarithmic family this is the half-Cauchy CDF of h.
double conditional_cdf(const PriorSpec& spec, double theta, double t);

/// 1 - F(t | θ) = π(t) / π(|θ|): the upper-tail probability that the
/// closed-form inverse below is parameterized by.
double conditional_tail(const PriorSpec& spec, double theta, double t);

/// Closed-form t with conditional_tail(t | θ) = u, u in (0, 1]. Returns |θ|
/// at u = 1 and grows without bound as u -> 0. Throws DomainError otherwise.
double inverse_conditional_cdf(const PriorSpec& spec, double theta, double u);

/// Draws t ~ p(t | θ) ∝ -π'(t) 1{t > |θ|}; the result is strictly above |θ|.
double sample_latent_scale(const PriorSpec& spec, double theta, Rng& rng);

/// Hyper-priors for the global scale τ.
struct FixedTau {
  double value = 1.0;
};
/// λ = τ^{-q} ~ Ga(shape, rate); exponential power family only.
struct GammaOnInversePowerQ {
  double shape = 1.0;
  double rate = 1.0;
};
/// 1 / (1 + τ) ~ U(0, 1).
struct UniformOnTransform {};
/// τ ~ C+(0, scale).
struct HalfCauchyTau {
  double scale = 1.0;
};

using TauHyperPrior = std::variant<FixedTau, GammaOnInversePowerQ, UniformOnTransform, HalfCauchyTau>;

void validate(const TauHyperPrior& hyper, const PriorSpec& spec);
bool is_fixed(const TauHyperPrior& hyper) noexcept;
std::string describe(const TauHyperPrior& hyper);

/// Fixed value, or the hyper-prior median.
double initial_tau(const TauHyperPrior& hyper, const PriorSpec& spec);

/// log p(τ) up to a constant; not defined for FixedTau.
double tau_hyper_log_density(const TauHyperPrior& hyper, const PriorSpec& spec, double tau);

/// Unnormalized log p(τ | deviations) = -n log τ + Σ log g(d_k / τ) + log p(τ),
/// with the latent scales integrated out.
double log_tau_conditional(const TauHyperPrior& hyper, const PriorSpec& spec,
                           std::span<const double> deviations, std::size_t n_elements,
                           double tau);

/// Draws τ from log_tau_conditional. Conjugate Gamma draw for the exponential
/// power family under GammaOnInversePowerQ, slice sampling on log τ otherwise
/// (current_tau seeds the slice).
double sample_tau(const TauHyperPrior& hyper, const PriorSpec& spec,
                  std::span<const double> deviations, std::size_t n_elements, double current_tau,
                  Rng& rng);

/// Univariate stepping-out/shrinkage slice sampler.
template <typename LogDensity>
double slice_sample(LogDensity&& log_density_fn, double x0, double width, Rng& rng,
                    int max_steps = 64);

}  // namespace unishrink

#include "unishrink/detail/slice.ipp"
