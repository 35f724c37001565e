#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "unishrink/random.hpp"

namespace unishrink {

/// Closed interval [lo, hi]; either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  bool empty() const noexcept { return !(lo < hi); }
  Interval intersect(const Interval& other) const noexcept;
  double length() const noexcept { return hi - lo; }
};

/// One or two disjoint, sorted intervals.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(Interval only);
  IntervalSet(Interval first, Interval second);

  const std::vector<Interval>& intervals() const noexcept { return parts_; }
  bool contains(double x) const noexcept;
  /// Nearest point of the set to x.
  double nearest(double x) const noexcept;

 private:
  std::vector<Interval> parts_{Interval{}};
};

/// Counts of draws and deterministic fallbacks, accumulated per chain.
struct SamplerCounters {
  std::uint64_t draws = 0;
  std::uint64_t fallbacks = 0;

  double fallback_rate() const noexcept {
    return draws == 0 ? 0.0 : static_cast<double>(fallbacks) / static_cast<double>(draws);
  }
  SamplerCounters& operator+=(const SamplerCounters& other) noexcept {
    draws += other.draws;
    fallbacks += other.fallbacks;
    return *this;
  }
};

/// Exact draw from N(mean, variance) restricted to region. Tails beyond three
/// standard deviations use exponential-proposal rejection; central regions
/// use the inverse CDF. With two intervals, one is chosen with probability
/// proportional to its mass.
double truncated_normal(double mean, double variance, const IntervalSet& region, Rng& rng,
                        SamplerCounters* counters = nullptr);

/// Uniform draw over region (total length must be finite).
double truncated_uniform(const IntervalSet& region, Rng& rng);

/// Exact draw from Ga(shape, rate) restricted to [lo, hi] ⊂ [0, ∞) by inverting
/// the regularized incomplete gamma function. rate == 0 is the power law
/// x^{shape-1} on a bounded interval.
double truncated_gamma(double shape, double rate, Interval region, Rng& rng,
                       SamplerCounters* counters = nullptr);

/// The u-quantile of Ga(shape, rate) restricted to region.
double truncated_gamma_quantile(double shape, double rate, Interval region, double u);

}  // namespace unishrink
