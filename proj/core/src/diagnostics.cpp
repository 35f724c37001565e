#include "unishrink/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "unishrink/errors.hpp"

namespace unishrink {

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (const double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double standard_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (const double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

double autocorrelation(std::span<const double> series, std::size_t lag) {
  const std::size_t n = series.size();
  if (n <= lag + 1) return 0.0;
  const double m = mean(series);
  double c0 = 0.0;
  for (const double v : series) c0 += (v - m) * (v - m);
  if (c0 <= 0.0) return 0.0;
  double ck = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) ck += (series[t] - m) * (series[t + lag] - m);
  return ck / c0;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

}  // namespace unishrink
