#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hrf/errors.hpp"

namespace hrf {

inline constexpr std::size_t kMinNodes = 8;

/// Samples of a function of the periodic coordinate x in [0, L) on a uniform
/// grid. Index arithmetic wraps modulo N.
class GridField {
 public:
  GridField() = default;

  GridField(std::vector<double> values, double period)
      : values_(std::move(values)), period_(period) {
    if (values_.size() < kMinNodes) {
      throw InvalidFieldError("grid field needs at least 8 nodes, got " +
                              std::to_string(values_.size()));
    }
    if (!(period_ > 0.0) || !std::isfinite(period_)) {
      throw InvalidFieldError("grid period must be positive and finite");
    }
  }

  static GridField constant(std::size_t nodes, double period, double value) {
    return GridField(std::vector<double>(nodes, value), period);
  }

  template <class Fn>
  static GridField sample(std::size_t nodes, double period, Fn&& fn) {
    std::vector<double> v(nodes);
    const double dx = period / static_cast<double>(nodes);
    for (std::size_t i = 0; i < nodes; ++i) v[i] = fn(dx * static_cast<double>(i));
    return GridField(std::move(v), period);
  }

  /// Same grid, values produced by fn(value).
  template <class Fn>
  GridField map(Fn&& fn) const {
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(values_[i]);
    return GridField(std::move(v), period_);
  }

  std::size_t size() const { return values_.size(); }
  double period() const { return period_; }
  double spacing() const { return period_ / static_cast<double>(values_.size()); }
  double x(std::size_t i) const { return spacing() * static_cast<double>(i); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Periodic access; i may be negative or >= N.
  double wrapped(std::ptrdiff_t i) const {
    const auto n = static_cast<std::ptrdiff_t>(values_.size());
    return values_[static_cast<std::size_t>(((i % n) + n) % n)];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool same_grid(const GridField& other) const {
    return values_.size() == other.values_.size() &&
           std::abs(period_ - other.period_) <= 1e-12 * period_;
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double max() const {
    double m = values_.front();
    for (double v : values_) m = v > m ? v : m;
    return m;
  }

  double min() const {
    double m = values_.front();
    for (double v : values_) m = v < m ? v : m;
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::abs(v) > m ? std::abs(v) : m;
    return m;
  }

 private:
  std::vector<double> values_;
  double period_ = 1.0;
};

inline void require_same_grid(const GridField& a, const GridField& b, const char* what) {
  if (!a.same_grid(b)) {
    throw GridMismatchError(std::string(what) + ": grid mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + " nodes)");
  }
}

inline void require_finite(const GridField& f, const char* what) {
  if (!f.all_finite()) throw InvalidFieldError(std::string(what) + " contains non-finite values");
}

/// a + s * b, on a's grid.
inline GridField axpy(const GridField& a, double s, const GridField& b) {
  require_same_grid(a, b, "axpy");
  GridField out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += s * b[i];
  return out;
}

inline double max_abs_difference(const GridField& a, const GridField& b) {
  require_same_grid(a, b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace hrf
