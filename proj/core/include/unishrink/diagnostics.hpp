#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace unishrink {

/// Sample autocorrelation at the given lag (biased estimator, normalized by
/// the lag-0 autocovariance). Returns 0 for constant or too-short series.
double autocorrelation(std::span<const double> series, std::size_t lag);

double mean(std::span<const double> values);
double standard_error(std::span<const double> values);
/// Linear-interpolated quantile, q in [0, 1]; the input is copied.
double quantile(std::span<const double> values, double q);
double median(std::span<const double> values);

}  // namespace unishrink
