#pragma once

// Heat kernel of a flat product circle x T^{n-1} as a Fourier series in x,
// with the Gaussian mollifier of width sigma folded in (Fourier factor
// e^{-k^2 sigma^2 / 2}).

#include <cmath>
#include <numbers>

namespace oracle {

inline double flat_kernel(double x, double y, double elapsed, double L, double volume, double sigma = 0.0,
                          int modes = 32) {
  const double w = 2.0 * std::numbers::pi / L;
  double s = 1.0;
  for (int k = 1; k <= modes; ++k) {
    const double q = k * w;
    s += 2.0 * std::exp(-q * q * (elapsed + 0.5 * sigma * sigma)) * std::cos(q * (x - y));
  }
  return s / volume;
}

}  // namespace oracle
