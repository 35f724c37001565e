#pragma once

#include <cmath>

namespace unishrink {

template <typename LogDensity>
double slice_sample(LogDensity&& log_density_fn, double x0, double width, Rng& rng,
                    int max_steps) {
  const double f0 = log_density_fn(x0);
  const double level = f0 + std::log(uniform_open(rng));
  double left = x0 - width * uniform_open(rng);
  double right = left + width;
  int j = static_cast<int>(std::floor(max_steps * uniform_open(rng)));
  int k = max_steps - 1 - j;
  while (j-- > 0 && log_density_fn(left) > level) left -= width;
  while (k-- > 0 && log_density_fn(right) > level) right += width;
  for (;;) {
    const double x = left + (right - left) * uniform_open(rng);
    if (log_density_fn(x) > level) return x;
    if (x < x0) {
      left = x;
    } else {
      right = x;
    }
    if (right - left < 1e-300) return x0;
  }
}

}  // namespace unishrink
