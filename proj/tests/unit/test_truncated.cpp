#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "unishrink/truncated.hpp"

using namespace unishrink;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var);
}

std::vector<double> draw_normal(double mean, double var, const IntervalSet& region, int n,
                                std::uint64_t seed, SamplerCounters* counters = nullptr) {
  Rng rng = make_stream(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& x : out) x = truncated_normal(mean, var, region, rng, counters);
  return out;
}

std::vector<double> draw_gamma(double shape, double rate, Interval region, int n,
                               std::uint64_t seed) {
  Rng rng = make_stream(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& x : out) x = truncated_gamma(shape, rate, region, rng);
  return out;
}

}  // namespace

TEST(IntervalSet, SortsAndMergesOverlaps) {
  const IntervalSet two(Interval{3, 4}, Interval{-2, -1});
  ASSERT_EQ(two.intervals().size(), 2u);
  EXPECT_EQ(two.intervals()[0].lo, -2);
  EXPECT_TRUE(two.contains(3.5));
  EXPECT_FALSE(two.contains(0.0));
  EXPECT_EQ(two.nearest(0.0), -1);
  const IntervalSet merged(Interval{0, 2}, Interval{1, 3});
  ASSERT_EQ(merged.intervals().size(), 1u);
  EXPECT_EQ(merged.intervals()[0].hi, 3);
}

TEST(TruncatedNormal, UnconstrainedMean) {
  const auto xs = draw_normal(0.0, 1.0, IntervalSet(Interval{}), 100000, 1);
  double mean = 0.0;
  for (double x : xs) mean += x;
  EXPECT_LT(std::abs(mean / xs.size()), 0.01);
}

TEST(TruncatedNormal, FarTailMeanAndSupport) {
  const auto xs = draw_normal(0.0, 1.0, IntervalSet(Interval{4.0, kInf}), 1000000, 2);
  double mean = 0.0;
  for (double x : xs) {
    ASSERT_GE(x, 4.0);
    mean += x;
  }
  mean /= xs.size();
  auto pdf = [](double x) { return std::exp(-0.5 * x * x); };
  const double oracle_mean =
      oracle::integrate([&](double x) { return x * pdf(x); }, 4.0, kInf) /
      oracle::integrate(pdf, 4.0, kInf);
  // φ(4)/Q(4) = 4.2256; the often-quoted 4.2226 is within the same 0.005 band.
  EXPECT_NEAR(oracle_mean, 4.2256, 1e-4);
  EXPECT_NEAR(mean, oracle_mean, 0.005);
  EXPECT_NEAR(mean, 4.2226, 0.005);
}

TEST(TruncatedNormal, TwoSymmetricIntervalsSplitEvenly) {
  const IntervalSet region(Interval{-2, -1}, Interval{1, 2});
  const auto xs = draw_normal(0.0, 1.0, region, 100000, 3);
  int left = 0;
  for (double x : xs) {
    ASSERT_TRUE(region.contains(x));
    if (x < 0) ++left;
  }
  // 4 binomial standard deviations.
  EXPECT_NEAR(left / 100000.0, 0.5, 4.0 * 0.5 / std::sqrt(100000.0));
}

TEST(TruncatedNormal, KolmogorovBattery) {
  struct Case {
    double mean, var;
    IntervalSet region;
  };
  const std::vector<Case> cases = {
      {0.0, 1.0, IntervalSet(Interval{-0.5, 1.5})},
      {2.0, 0.25, IntervalSet(Interval{-kInf, 0.3})},      // far left tail of the mean
      {-1.0, 4.0, IntervalSet(Interval{5.0, 9.0})},        // bounded far tail
      {0.3, 1e-4, IntervalSet(Interval{0.2999, 0.30005})}, // narrow
      {0.0, 1.0, IntervalSet(Interval{-3.5, -2.0}, Interval{0.5, 0.7})},
      {1.0, 2.0, IntervalSet(Interval{-kInf, -6.0})},
  };
  std::uint64_t seed = 10;
  for (const auto& c : cases) {
    const auto& parts = c.region.intervals();
    const double lo = std::max(parts.front().lo, c.mean - 40.0 * std::sqrt(c.var));
    const double hi = std::min(parts.back().hi, c.mean + 40.0 * std::sqrt(c.var));
    auto dens = [&](double x) { return normal_pdf(x, c.mean, c.var); };
    std::vector<oracle::TabulatedCdf> tables;
    std::vector<double> masses;
    std::vector<Interval> clipped;
    for (const auto& part : parts) {
      const Interval cl{std::max(part.lo, lo), std::min(part.hi, hi)};
      clipped.push_back(cl);
      tables.emplace_back(dens, cl.lo, cl.hi, 2000);
      masses.push_back(tables.back().total_mass());
    }
    double total = 0.0;
    for (double m : masses) total += m;
    auto cdf = [&](double x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < clipped.size(); ++k) acc += masses[k] * tables[k](x);
      return acc / total;
    };
    const auto xs = draw_normal(c.mean, c.var, c.region, 100000, ++seed);
    for (double x : xs) ASSERT_TRUE(c.region.contains(x));
    EXPECT_LT(oracle::ks_distance(xs, cdf), 0.005) << "case " << seed;
  }
}

TEST(TruncatedNormal, UnderflowFallsBackToNearestPointAndCounts) {
  SamplerCounters counters;
  Rng rng = make_stream(4);
  const double x = truncated_normal(0.0, 1e-6, IntervalSet(Interval{1e4, 1e4 + 1.0}), rng,
                                    &counters);
  EXPECT_GE(x, 1e4);
  EXPECT_LE(x, 1e4 + 1.0);
  EXPECT_EQ(counters.draws, 1u);
}

TEST(TruncatedGamma, ExponentialMean) {
  const auto xs = draw_gamma(1.0, 1.0, Interval{0.0, kInf}, 1000000, 5);
  double mean = 0.0;
  for (double x : xs) mean += x;
  EXPECT_NEAR(mean / xs.size(), 1.0, 0.01);
}

TEST(TruncatedGamma, QuantileOfTruncatedExponential) {
  const double expected = -std::log(0.5 * std::exp(-1.0) + 0.5 * std::exp(-2.0));
  EXPECT_NEAR(expected, 1.37989, 1e-5);
  EXPECT_NEAR(truncated_gamma_quantile(1.0, 1.0, Interval{1.0, 2.0}, 0.5), expected, 1e-12);
}

TEST(TruncatedGamma, KolmogorovBattery) {
  struct Case {
    double shape, rate;
    Interval region;
  };
  const std::vector<Case> cases = {
      {3.0, 2.0, Interval{0.5, 1.5}},
      {0.5, 1.0, Interval{0.0, 0.2}},
      {26.0, 10.0, Interval{0.0, 0.4}},     // far left tail
      {2.0, 1.0, Interval{40.0, 45.0}},     // far right tail
      {1001.0, 500.0, Interval{2.5, kInf}}, // sharp, upper tail
      {2.0, 0.0, Interval{0.1, 3.0}},       // power law, no data
  };
  std::uint64_t seed = 20;
  for (const auto& c : cases) {
    auto dens = [&](double x) {
      return std::exp((c.shape - 1.0) * std::log(x) - c.rate * x);
    };
    const double lo = c.region.lo;
    const double hi = std::isinf(c.region.hi) ? c.shape / std::max(c.rate, 1e-9) * 2.0 + 50.0
                                              : c.region.hi;
    const oracle::TabulatedCdf cdf(dens, lo, hi, 1000);
    auto xs = draw_gamma(c.shape, c.rate, c.region, 100000, ++seed);
    for (double x : xs) {
      ASSERT_GE(x, c.region.lo);
      ASSERT_LE(x, c.region.hi);
    }
    EXPECT_LT(oracle::ks_distance(xs, [&](double x) { return cdf(x); }), 0.005)
        << "case " << seed;
  }
}
