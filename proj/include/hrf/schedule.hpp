#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "hrf/errors.hpp"

namespace hrf {

/// Positive non-increasing coupling alpha(t).
struct AlphaSchedule {
  enum class Kind { Constant, LinearClamped, ExponentialDecay };

  Kind kind = Kind::Constant;
  double alpha0 = 1.0;
  double rate = 0.0;
  double floor = 1e-3;

  static AlphaSchedule constant(double a0) { return make(Kind::Constant, a0, 0.0, std::min(a0, 1e-3)); }
  static AlphaSchedule linear_clamped(double a0, double rate, double floor) {
    return make(Kind::LinearClamped, a0, rate, floor);
  }
  static AlphaSchedule exponential_decay(double a0, double rate, double floor) {
    return make(Kind::ExponentialDecay, a0, rate, floor);
  }

  static AlphaSchedule make(Kind kind, double a0, double rate, double floor) {
    if (!(a0 > 0.0) || !(floor > 0.0) || !(rate >= 0.0) || a0 < floor) {
      throw DomainError("alpha schedule needs alpha0 >= floor > 0 and rate >= 0");
    }
    return AlphaSchedule{kind, a0, rate, floor};
  }

  double operator()(double t) const {
    if (t < 0.0) throw DomainError("alpha schedule evaluated at negative time");
    switch (kind) {
      case Kind::Constant:
        return alpha0;
      case Kind::LinearClamped:
        return std::max(floor, alpha0 - rate * t);
      case Kind::ExponentialDecay:
        return std::max(floor, alpha0 * std::exp(-rate * t));
    }
    return alpha0;
  }

  /// Analytic derivative; zero once the floor is active.
  double derivative(double t) const {
    if (t < 0.0) throw DomainError("alpha schedule evaluated at negative time");
    switch (kind) {
      case Kind::Constant:
        return 0.0;
      case Kind::LinearClamped:
        return alpha0 - rate * t > floor ? -rate : 0.0;
      case Kind::ExponentialDecay: {
        const double a = alpha0 * std::exp(-rate * t);
        return a > floor ? -rate * a : 0.0;
      }
    }
    return 0.0;
  }
};

inline double alpha_eval(const AlphaSchedule& s, double t) { return s(t); }

inline std::string_view to_string(AlphaSchedule::Kind k) {
  switch (k) {
    case AlphaSchedule::Kind::Constant:
      return "constant";
    case AlphaSchedule::Kind::LinearClamped:
      return "linear-clamped";
    case AlphaSchedule::Kind::ExponentialDecay:
      return "exponential-decay";
  }
  return "constant";
}

inline AlphaSchedule::Kind parse_alpha_kind(std::string_view s) {
  if (s == "constant") return AlphaSchedule::Kind::Constant;
  if (s == "linear-clamped") return AlphaSchedule::Kind::LinearClamped;
  if (s == "exponential-decay") return AlphaSchedule::Kind::ExponentialDecay;
  throw ConfigError("unknown alpha schedule kind '" + std::string(s) + "'");
}

}  // namespace hrf
