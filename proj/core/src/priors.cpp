#include "unishrink/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>

#include "unishrink/errors.hpp"

namespace unishrink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidSpec(std::string(what) + " must be a positive finite number");
  }
}

// log π(|θ|) with the logarithmic family's θ = 0 spike reported as +inf.
double log_density_or_inf(const PriorSpec& spec, double theta) {
  if (spec.family() == PriorFamily::Logarithmic && theta == 0.0) return kInf;
  return log_density(spec, theta);
}

}  // namespace

PriorSpec::PriorSpec(PriorFamily family, double shape, double tau)
    : family_(family), shape_(shape), tau_(tau) {
  if (family != PriorFamily::Logarithmic) require_positive(shape, "prior shape (q, nu or alpha)");
  require_positive(tau, "prior scale tau");
}

PriorSpec PriorSpec::exponential_power(double q, double tau) {
  return {PriorFamily::ExponentialPower, q, tau};
}
PriorSpec PriorSpec::student_t(double nu, double tau) { return {PriorFamily::StudentT, nu, tau}; }
PriorSpec PriorSpec::generalized_double_pareto(double alpha, double tau) {
  return {PriorFamily::GeneralizedDoublePareto, alpha, tau};
}
PriorSpec PriorSpec::logarithmic(double tau) { return {PriorFamily::Logarithmic, 0.0, tau}; }

PriorSpec PriorSpec::with_tau(double tau) const { return {family_, shape_, tau}; }

std::string_view PriorSpec::name() const noexcept {
  switch (family_) {
    case PriorFamily::ExponentialPower: return "ep";
    case PriorFamily::StudentT: return "student_t";
    case PriorFamily::GeneralizedDoublePareto: return "gdp";
    case PriorFamily::Logarithmic: return "log";
  }
  return "unknown";
}

std::string PriorSpec::label() const {
  std::ostringstream out;
  out << name();
  switch (family_) {
    case PriorFamily::ExponentialPower: out << "_q=" << shape_; break;
    case PriorFamily::StudentT: out << "_nu=" << shape_; break;
    case PriorFamily::GeneralizedDoublePareto: out << "_alpha=" << shape_; break;
    case PriorFamily::Logarithmic: break;
  }
  return out.str();
}

double log_density(const PriorSpec& spec, double theta) {
  if (!std::isfinite(theta)) throw DomainError("log_density: theta must be finite");
  const double x = std::abs(theta) / spec.tau();
  switch (spec.family()) {
    case PriorFamily::ExponentialPower:
      return -std::pow(x, spec.shape());
    case PriorFamily::StudentT:
      return -0.5 * (spec.shape() + 1.0) * std::log1p(x * x);
    case PriorFamily::GeneralizedDoublePareto:
      return -(1.0 + spec.shape()) * std::log1p(x);
    case PriorFamily::Logarithmic:
      if (theta == 0.0) throw DomainError("log_density: logarithmic prior is infinite at 0");
      return std::log(std::log1p(1.0 / (x * x)));
  }
  return 0.0;
}

double mixing_log_density(const PriorSpec& spec, double t) {
  if (!(t > 0.0)) throw DomainError("mixing_log_density: t must be positive");
  const double x = t / spec.tau();
  switch (spec.family()) {
    case PriorFamily::ExponentialPower:
      return spec.shape() * std::log(t) - std::pow(x, spec.shape());
    case PriorFamily::StudentT:
      return 2.0 * std::log(t) - 0.5 * (spec.shape() + 3.0) * std::log1p(x * x);
    case PriorFamily::GeneralizedDoublePareto:
      return std::log(t) - (2.0 + spec.shape()) * std::log1p(x);
    case PriorFamily::Logarithmic:
      return -std::log1p(x * x);
  }
  return 0.0;
}

double conditional_tail(const PriorSpec& spec, double theta, double t) {
  const double a = std::abs(theta);
  if (t <= a) return 1.0;
  if (std::isinf(t)) return 0.0;
  if (spec.family() == PriorFamily::Logarithmic && a == 0.0) {
    return 1.0 - 2.0 / std::numbers::pi * std::atan(t / spec.tau());
  }
  return std::exp(log_density(spec, t) - log_density_or_inf(spec, a));
}

double conditional_cdf(const PriorSpec& spec, double theta, double t) {
  const double a = std::abs(theta);
  if (t <= a) return 0.0;
  if (std::isinf(t)) return 1.0;
  if (spec.family() == PriorFamily::Logarithmic && a == 0.0) {
    return 2.0 / std::numbers::pi * std::atan(t / spec.tau());
  }
  return -std::expm1(log_density(spec, t) - log_density_or_inf(spec, a));
}

double inverse_conditional_cdf(const PriorSpec& spec, double theta, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw DomainError("inverse_conditional_cdf: u must lie in (0, 1]");
  if (!std::isfinite(theta)) throw DomainError("inverse_conditional_cdf: theta must be finite");
  const double a = std::abs(theta);
  const double tau = spec.tau();
  const double log_u = std::log(u);
  switch (spec.family()) {
    case PriorFamily::ExponentialPower: {
      const double q = spec.shape();
      // {τ^q (-log u) + |θ|^q}^{1/q}
      return tau * std::pow(std::pow(a / tau, q) - log_u, 1.0 / q);
    }
    case PriorFamily::StudentT: {
      // {u^{-2/(ν+1)} (τ² + θ²) - τ²}^{1/2}
      const double growth = std::expm1(-2.0 / (spec.shape() + 1.0) * log_u);
      return std::sqrt(a * a + (tau * tau + a * a) * growth);
    }
    case PriorFamily::GeneralizedDoublePareto: {
      // u^{-1/(1+α)} (|θ| + τ) - τ
      return a + (a + tau) * std::expm1(-log_u / (1.0 + spec.shape()));
    }
    case PriorFamily::Logarithmic: {
      if (a == 0.0) {
        // h(t) itself: half-Cauchy with tail u.
        return tau * std::tan(0.5 * std::numbers::pi * (1.0 - u));
      }
      // τ {(1 + τ²/θ²)^u - 1}^{-1/2}
      const double r = tau / a;
      return tau / std::sqrt(std::expm1(u * std::log1p(r * r)));
    }
  }
  return a;
}

double sample_latent_scale(const PriorSpec& spec, double theta, Rng& rng) {
  const double a = std::abs(theta);
  const double t = inverse_conditional_cdf(spec, theta, uniform_open(rng));
  // Strict feasibility: t must stay above |θ| even when rounding collapses the gap.
  return t > a ? t : std::nextafter(a, kInf);
}

void validate(const TauHyperPrior& hyper, const PriorSpec& spec) {
  std::visit(
      [&](const auto& h) {
        using H = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<H, FixedTau>) {
          require_positive(h.value, "fixed tau");
        } else if constexpr (std::is_same_v<H, GammaOnInversePowerQ>) {
          require_positive(h.shape, "tau hyper-prior shape");
          require_positive(h.rate, "tau hyper-prior rate");
          if (spec.family() != PriorFamily::ExponentialPower) {
            throw InvalidSpec("gamma_inv_q hyper-prior requires the exponential power family");
          }
        } else if constexpr (std::is_same_v<H, HalfCauchyTau>) {
          require_positive(h.scale, "half-Cauchy scale");
        }
      },
      hyper);
}

bool is_fixed(const TauHyperPrior& hyper) noexcept {
  return std::holds_alternative<FixedTau>(hyper);
}

std::string describe(const TauHyperPrior& hyper) {
  return std::visit(
      [](const auto& h) -> std::string {
        using H = std::decay_t<decltype(h)>;
        std::ostringstream out;
        if constexpr (std::is_same_v<H, FixedTau>) {
          out << "fixed(" << h.value << ")";
        } else if constexpr (std::is_same_v<H, GammaOnInversePowerQ>) {
          out << "gamma_inv_q(" << h.shape << "," << h.rate << ")";
        } else if constexpr (std::is_same_v<H, UniformOnTransform>) {
          out << "uniform_transform";
        } else {
          out << "half_cauchy(" << h.scale << ")";
        }
        return out.str();
      },
      hyper);
}

double initial_tau(const TauHyperPrior& hyper, const PriorSpec& spec) {
  validate(hyper, spec);
  return std::visit(
      [&](const auto& h) -> double {
        using H = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<H, FixedTau>) {
          return h.value;
        } else if constexpr (std::is_same_v<H, GammaOnInversePowerQ>) {
          const boost::math::gamma_distribution<double> lambda(h.shape, 1.0 / h.rate);
          return std::pow(boost::math::quantile(lambda, 0.5), -1.0 / spec.shape());
        } else if constexpr (std::is_same_v<H, UniformOnTransform>) {
          return 1.0;
        } else {
          return h.scale;
        }
      },
      hyper);
}

double tau_hyper_log_density(const TauHyperPrior& hyper, const PriorSpec& spec, double tau) {
  if (!(tau > 0.0)) return -kInf;
  return std::visit(
      [&](const auto& h) -> double {
        using H = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<H, FixedTau>) {
          throw DomainError("tau_hyper_log_density: fixed tau has no density");
        } else if constexpr (std::is_same_v<H, GammaOnInversePowerQ>) {
          const double q = spec.shape();
          const double log_tau = std::log(tau);
          // λ = τ^{-q} ~ Ga(a, b), Jacobian q τ^{-q-1}.
          return (h.shape - 1.0) * (-q * log_tau) - h.rate * std::exp(-q * log_tau) -
                 (q + 1.0) * log_tau;
        } else if constexpr (std::is_same_v<H, UniformOnTransform>) {
          return -2.0 * std::log1p(tau);
        } else {
          const double x = tau / h.scale;
          return -std::log1p(x * x);
        }
      },
      hyper);
}

double log_tau_conditional(const TauHyperPrior& hyper, const PriorSpec& spec,
                           std::span<const double> deviations, std::size_t n_elements,
                           double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) return -kInf;
  const PriorSpec unit = spec.with_tau(1.0);
  double total = -static_cast<double>(n_elements) * std::log(tau);
  for (const double d : deviations) {
    double x = d / tau;
    // An exact zero under the logarithmic spike carries no τ information.
    if (x == 0.0 && spec.family() == PriorFamily::Logarithmic) x = 1e-300;
    total += log_density(unit, x);
  }
  return total + tau_hyper_log_density(hyper, spec, tau);
}

double sample_tau(const TauHyperPrior& hyper, const PriorSpec& spec,
                  std::span<const double> deviations, std::size_t n_elements, double current_tau,
                  Rng& rng) {
  if (const auto* fixed = std::get_if<FixedTau>(&hyper)) return fixed->value;
  if (const auto* conj = std::get_if<GammaOnInversePowerQ>(&hyper)) {
    const double q = spec.shape();
    double sum = 0.0;
    for (const double d : deviations) sum += std::pow(std::abs(d), q);
    std::gamma_distribution<double> lambda(conj->shape + static_cast<double>(n_elements) / q,
                                           1.0 / (conj->rate + sum));
    return std::pow(lambda(rng), -1.0 / q);
  }
  if (!(current_tau > 0.0)) current_tau = initial_tau(hyper, spec);
  auto target = [&](double eta) {
    return log_tau_conditional(hyper, spec, deviations, n_elements, std::exp(eta)) + eta;
  };
  return std::exp(slice_sample(target, std::log(current_tau), 1.0, rng));
}

}  // namespace unishrink
