#pragma once

#include <cmath>
#include <vector>

#include "hrf/errors.hpp"

namespace hrf {

/// Solves the periodic tridiagonal system
///   lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]   (indices mod N)
/// by the Thomas algorithm with a Sherman-Morrison correction for the corners.
inline std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                                                    const std::vector<double>& upper, const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (n < 3 || lower.size() != n || upper.size() != n || rhs.size() != n) {
    throw SolverError("cyclic tridiagonal system needs matching sizes >= 3");
  }
  auto thomas = [n](std::vector<double> a, std::vector<double> b, std::vector<double> c, std::vector<double> d) {
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
  };
  const double alpha = upper[n - 1];  // row n-1, column 0
  const double beta = lower[0];       // row 0, column n-1
  const double gamma = -diag[0];
  std::vector<double> b = diag;
  b[0] -= gamma;
  b[n - 1] -= alpha * beta / gamma;
  std::vector<double> a = lower, c = upper;
  a[0] = 0.0;
  c[n - 1] = 0.0;
  const std::vector<double> x = thomas(a, b, c, rhs);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const std::vector<double> z = thomas(a, b, c, u);
  const double vx = x[0] + beta / gamma * x[n - 1];
  const double vz = z[0] + beta / gamma * z[n - 1];
  const double fact = vx / (1.0 + vz);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
  for (double v : out) {
    if (!std::isfinite(v)) throw SolverError("cyclic tridiagonal solve produced non-finite values");
  }
  return out;
}

}  // namespace hrf
