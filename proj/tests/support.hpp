#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hrf/flow.hpp"
#include "hrf/geometry.hpp"

namespace testing_support {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline hrf::CoupledState sphere_state(std::size_t N, hrf::Profile F, hrf::Profile h, int n = 3,
                                      std::vector<hrf::Profile> phi = {}, double alpha = 1.0, double L = kTwoPi) {
  hrf::CoupledState s;
  s.geom = hrf::build_geometry(hrf::Backend::WarpedCircleSphere, n, N, L, {std::move(F), {std::move(h)}});
  for (auto& p : phi) s.phi.push_back(hrf::GridField::sample(N, L, p));
  s.alpha = alpha;
  return s;
}

inline hrf::CoupledState torus_state(std::size_t N, hrf::Profile a, hrf::Profile b, hrf::Profile c,
                                     std::vector<hrf::Profile> phi = {}, double alpha = 1.0, double L = kTwoPi) {
  hrf::CoupledState s;
  hrf::GeometryInit init{std::move(a), {std::move(b), std::move(c)}};
  s.geom = hrf::build_geometry(hrf::Backend::DiagonalTorus, 3, N, L, init);
  for (auto& p : phi) s.phi.push_back(hrf::GridField::sample(N, L, p));
  s.alpha = alpha;
  return s;
}

inline hrf::Profile constant(double c) {
  return [c](double) { return c; };
}

inline double l2_difference(const hrf::CoupledState& s, const hrf::GridField& a, const hrf::GridField& b) {
  return std::sqrt(hrf::integrate(s, axpy(a, -1.0, b).map([](double v) { return v * v; })));
}

}  // namespace testing_support
