#include "unishrink/truncated.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "unishrink/errors.hpp"

namespace unishrink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailCutoff = 3.0;
constexpr int kMaxRejections = 10000;

using boost_policy = boost::math::policies::policy<
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::underflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

// Upper tail Q(x) = P(Z > x).
double normal_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_q_inverse(double q) {
  // Q^{-1}(q) = sqrt(2) erfc^{-1}(2q)
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q, boost_policy());
}

// log Q(x) for x >= 0, valid far into the tail.
double log_normal_q(double x) {
  if (x < 37.0) return std::log(normal_q(x));
  const double x2 = x * x;
  return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// log of P(a <= Z <= b) for the standard normal.
double log_normal_mass(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a >= 0.0) {
    const double la = log_normal_q(a);
    const double lb = std::isinf(b) ? -kInf : log_normal_q(b);
    if (std::isinf(la)) return -kInf;
    return la + std::log(-std::expm1(lb - la));
  }
  if (b <= 0.0) return log_normal_mass(-b, -a);
  return std::log(1.0 - normal_q(-a) - normal_q(b));
}

// Exponential proposal with rate `alpha` on [a, b], a >= 0, via inverse CDF.
double truncated_exponential(double alpha, double a, double b, Rng& rng) {
  const double u = uniform_open(rng);
  if (std::isinf(b)) return a - std::log(u) / alpha;
  return a - std::log1p(u * std::expm1(-alpha * (b - a))) / alpha;
}

// Right tail a >= kTailCutoff: exponential-proposal rejection with the
// optimal rate (a + sqrt(a^2 + 4)) / 2.
double normal_tail(double a, double b, Rng& rng) {
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (int k = 0; k < kMaxRejections; ++k) {
    const double z = truncated_exponential(alpha, a, b, rng);
    const double d = z - alpha;
    if (uniform_open(rng) <= std::exp(-0.5 * d * d)) return z;
  }
  return a;
}

// Standard normal on [a, b].
double standard_truncated_normal(double a, double b, Rng& rng) {
  if (a >= kTailCutoff) return normal_tail(a, b, rng);
  if (b <= -kTailCutoff) return -normal_tail(-b, -a, rng);
  if (b - a < 1e-8) {
    // Narrow interval: uniform proposal against the peak inside [a, b].
    const double peak = std::clamp(0.0, a, b);
    for (int k = 0; k < kMaxRejections; ++k) {
      const double z = a + (b - a) * uniform_open(rng);
      if (uniform_open(rng) <= std::exp(0.5 * (peak * peak - z * z))) return z;
    }
    return peak;
  }
  const double u = uniform_open(rng);
  double z = 0.0;
  if (a >= 0.0) {
    const double qa = normal_q(a);
    const double qb = std::isinf(b) ? 0.0 : normal_q(b);
    z = normal_q_inverse(qa - u * (qa - qb));
  } else if (b <= 0.0) {
    const double qa = normal_q(-b);
    const double qb = std::isinf(a) ? 0.0 : normal_q(-a);
    z = -normal_q_inverse(qa - u * (qa - qb));
  } else {
    const double pa = std::isinf(a) ? 0.0 : normal_q(-a);
    const double pb = std::isinf(b) ? 1.0 : 1.0 - normal_q(b);
    const double p = pa + u * (pb - pa);
    z = p < 0.5 ? -normal_q_inverse(p) : normal_q_inverse(1.0 - p);
  }
  return std::clamp(z, a, b);
}

void count_draw(SamplerCounters* counters, bool fallback) {
  if (counters == nullptr) return;
  ++counters->draws;
  if (fallback) ++counters->fallbacks;
}

}  // namespace

Interval Interval::intersect(const Interval& other) const noexcept {
  return {std::max(lo, other.lo), std::min(hi, other.hi)};
}

IntervalSet::IntervalSet(Interval only) : parts_{only} {}

IntervalSet::IntervalSet(Interval first, Interval second) {
  if (second.lo < first.lo) std::swap(first, second);
  if (first.hi >= second.lo) {
    parts_ = {Interval{first.lo, std::max(first.hi, second.hi)}};
  } else {
    parts_ = {first, second};
  }
}

bool IntervalSet::contains(double x) const noexcept {
  return std::any_of(parts_.begin(), parts_.end(), [x](const Interval& i) { return i.contains(x); });
}

double IntervalSet::nearest(double x) const noexcept {
  double best = std::clamp(x, parts_.front().lo, parts_.front().hi);
  for (const auto& part : parts_) {
    const double candidate = std::clamp(x, part.lo, part.hi);
    if (std::abs(candidate - x) < std::abs(best - x)) best = candidate;
  }
  return best;
}

double truncated_normal(double mean, double variance, const IntervalSet& region, Rng& rng,
                        SamplerCounters* counters) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw DomainError("truncated_normal: variance must be positive and finite");
  }
  const double sd = std::sqrt(variance);
  const auto& parts = region.intervals();
  std::size_t chosen = 0;
  if (parts.size() == 2) {
    const double m0 = log_normal_mass((parts[0].lo - mean) / sd, (parts[0].hi - mean) / sd);
    const double m1 = log_normal_mass((parts[1].lo - mean) / sd, (parts[1].hi - mean) / sd);
    if (std::isinf(m0) && std::isinf(m1)) {
      count_draw(counters, true);
      return region.nearest(mean);
    }
    const double top = std::max(m0, m1);
    const double w0 = std::exp(m0 - top);
    const double w1 = std::exp(m1 - top);
    chosen = uniform_open(rng) * (w0 + w1) < w0 ? 0 : 1;
  }
  const Interval& part = parts[chosen];
  if (part.empty()) {
    if (part.lo == part.hi) {
      count_draw(counters, false);
      return part.lo;
    }
    throw InfeasibleState("truncated_normal: empty region");
  }
  const double a = (part.lo - mean) / sd;
  const double b = (part.hi - mean) / sd;
  const double z = standard_truncated_normal(a, b, rng);
  const double x = std::clamp(mean + sd * z, part.lo, part.hi);
  count_draw(counters, false);
  return x;
}

double truncated_uniform(const IntervalSet& region, Rng& rng) {
  const auto& parts = region.intervals();
  double total = 0.0;
  for (const auto& part : parts) total += std::max(0.0, part.length());
  if (!std::isfinite(total)) throw DomainError("truncated_uniform: region must be bounded");
  if (total == 0.0) return parts.front().lo;
  double offset = uniform_open(rng) * total;
  for (const auto& part : parts) {
    const double len = std::max(0.0, part.length());
    if (offset <= len) return std::clamp(part.lo + offset, part.lo, part.hi);
    offset -= len;
  }
  return parts.back().hi;
}

namespace {

struct GammaMass {
  bool upper = false;  // work with Q = 1 - P when the interval sits in the right tail
  double from = 0.0;   // P(lo) or Q(lo)
  double to = 0.0;     // P(hi) or Q(hi)
  double mass = 0.0;
};

GammaMass gamma_mass(double shape, double rate, Interval region) {
  GammaMass m;
  const double x_lo = rate * region.lo;
  const double x_hi = std::isinf(region.hi) ? kInf : rate * region.hi;
  m.upper = x_lo > shape;
  if (m.upper) {
    m.from = boost::math::gamma_q(shape, x_lo, boost_policy());
    m.to = std::isinf(x_hi) ? 0.0 : boost::math::gamma_q(shape, x_hi, boost_policy());
    m.mass = m.from - m.to;
  } else {
    m.from = x_lo <= 0.0 ? 0.0 : boost::math::gamma_p(shape, x_lo, boost_policy());
    m.to = std::isinf(x_hi) ? 1.0 : boost::math::gamma_p(shape, x_hi, boost_policy());
    m.mass = m.to - m.from;
  }
  return m;
}

double gamma_invert(double shape, double rate, const GammaMass& m, double u) {
  double x = 0.0;
  if (m.upper) {
    x = boost::math::gamma_q_inv(shape, m.from - u * m.mass, boost_policy());
  } else {
    x = boost::math::gamma_p_inv(shape, m.from + u * m.mass, boost_policy());
  }
  return x / rate;
}

// Power law x^{shape-1} on a bounded [lo, hi].
double power_law_quantile(double shape, Interval region, double u) {
  const double lo_k = std::pow(region.lo, shape);
  const double hi_k = std::pow(region.hi, shape);
  return std::pow(lo_k + u * (hi_k - lo_k), 1.0 / shape);
}

// Rejection for shape >= 1 (log-concave) when the inverse CDF has no usable
// mass: tangent-exponential envelope at the endpoint nearest the mode.
bool gamma_rejection(double shape, double rate, Interval region, Rng& rng, double& out) {
  if (shape < 1.0) return false;
  const double mode = (shape - 1.0) / rate;
  auto log_f = [&](double x) { return (shape - 1.0) * std::log(x) - rate * x; };
  if (mode >= region.lo && mode <= region.hi) {
    if (std::isinf(region.hi)) return false;
    const double peak = log_f(std::max(mode, std::numeric_limits<double>::min()));
    for (int k = 0; k < kMaxRejections; ++k) {
      const double x = region.lo + region.length() * uniform_open(rng);
      if (std::log(uniform_open(rng)) <= log_f(x) - peak) {
        out = x;
        return true;
      }
    }
    return false;
  }
  const bool decreasing = region.lo > mode;
  const double anchor = decreasing ? region.lo : region.hi;
  if (!(anchor > 0.0)) return false;
  const double slope = (shape - 1.0) / anchor - rate;
  const double len = region.length();
  for (int k = 0; k < kMaxRejections; ++k) {
    double x = 0.0;
    if (decreasing) {
      x = truncated_exponential(-slope, region.lo, region.hi, rng);
    } else {
      const double y = std::isinf(len) ? kInf : -std::log1p(uniform_open(rng) * std::expm1(-slope * len)) / slope;
      x = region.hi - y;
    }
    if (!(x >= region.lo && x <= region.hi)) continue;
    const double envelope = log_f(anchor) + slope * (x - anchor);
    if (std::log(uniform_open(rng)) <= log_f(x) - envelope) {
      out = x;
      return true;
    }
  }
  return false;
}

void check_gamma_args(double shape, double rate, Interval region) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("truncated_gamma: shape must be positive");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("truncated_gamma: rate must be non-negative");
  if (!(region.lo >= 0.0) || !(region.lo <= region.hi)) {
    throw InfeasibleState("truncated_gamma: region must satisfy 0 <= lo <= hi");
  }
  if (rate == 0.0 && std::isinf(region.hi)) {
    throw NumericalFailure("truncated_gamma: improper power law on an unbounded region");
  }
}

}  // namespace

double truncated_gamma_quantile(double shape, double rate, Interval region, double u) {
  check_gamma_args(shape, rate, region);
  if (rate == 0.0) return power_law_quantile(shape, region, u);
  const GammaMass m = gamma_mass(shape, rate, region);
  if (!(m.mass > 0.0)) throw NumericalFailure("truncated_gamma_quantile: region has no mass");
  return std::clamp(gamma_invert(shape, rate, m, u), region.lo, region.hi);
}

double truncated_gamma(double shape, double rate, Interval region, Rng& rng,
                       SamplerCounters* counters) {
  check_gamma_args(shape, rate, region);
  if (region.lo == region.hi) {
    count_draw(counters, false);
    return region.lo;
  }
  if (rate == 0.0) {
    count_draw(counters, false);
    return std::clamp(power_law_quantile(shape, region, uniform_open(rng)), region.lo, region.hi);
  }
  // Most Gibbs regions hold nearly all of the gamma mass, where plain
  // proposals are far cheaper than the incomplete-gamma inversion. A proposal
  // accepted inside the region and the inversion after a run of rejections
  // both follow the truncated law, so the mixture is exact.
  std::gamma_distribution<double> proposal(shape, 1.0 / rate);
  for (int attempt = 0; attempt < 3; ++attempt) {
    const double x = proposal(rng);
    if (x >= region.lo && x <= region.hi) {
      count_draw(counters, false);
      return x;
    }
  }
  const GammaMass m = gamma_mass(shape, rate, region);
  const double scale = m.upper ? m.from : std::max(m.to, m.from);
  // Cancellation leaves too few significant digits below ~1e-9 relative mass.
  if (m.mass > 1e-9 * scale && m.mass > 0.0) {
    const double x = gamma_invert(shape, rate, m, uniform_open(rng));
    if (std::isfinite(x)) {
      count_draw(counters, false);
      return std::clamp(x, region.lo, region.hi);
    }
  }
  double x = 0.0;
  if (gamma_rejection(shape, rate, region, rng, x)) {
    count_draw(counters, false);
    return x;
  }
  count_draw(counters, true);
  const double mode = shape >= 1.0 ? (shape - 1.0) / rate : 0.0;
  return std::clamp(mode, region.lo, region.hi);
}

}  // namespace unishrink
