#include <gtest/gtest.h>

#include <cmath>

#include "hrf/entropy.hpp"
#include "support.hpp"

using namespace hrf;
using testing_support::constant;
using testing_support::kTwoPi;

namespace {

CoupledState flat(std::size_t N, std::vector<Profile> phi = {}, double alpha = 1.0) {
  return testing_support::torus_state(N, constant(1.0), constant(1.0), constant(1.0), std::move(phi), alpha);
}

Trajectory static_trajectory(const CoupledState& s, double T) {
  auto s1 = s;
  s1.t = T;
  return Trajectory::from_states({s, s1}, AlphaSchedule::constant(s.alpha));
}

double gauss(double x, double c, double w) {
  double v = 0.0;
  for (int m = -2; m <= 2; ++m) v += std::exp(-0.5 * (x - c - m * kTwoPi) * (x - c - m * kTwoPi) / (w * w));
  return v;
}

double dgauss(double x, double c, double w) {
  double v = 0.0;
  for (int m = -2; m <= 2; ++m) {
    const double d = x - c - m * kTwoPi;
    v -= d / (w * w) * std::exp(-0.5 * d * d / (w * w));
  }
  return v;
}

void expect_fd_matches_rhs(const EntropySeries& es) {
  for (const auto& r : es.records) {
    if (!r.interior) continue;
    EXPECT_LE(std::abs(r.dW_fd - r.dW_rhs), std::max(1e-4, 0.02 * std::abs(r.dW_rhs))) << "t = " << r.t;
  }
}

}  // namespace

TEST(WEntropy, FlatUniformClosedForm) {
  const auto s = flat(32);
  const double vol = std::pow(kTwoPi, 3);
  const GridField u = GridField::constant(32, kTwoPi, 1.0 / vol);
  const double w1 = std::log(vol) - 1.5 * std::log(4.0 * std::numbers::pi) - 3.0;
  EXPECT_NEAR(w_entropy(s, u, 1.0), w1, 1e-12);
  EXPECT_NEAR(w_entropy(s, u, std::exp(2.0)), w1 - 3.0, 1e-12);
  EXPECT_THROW(w_entropy(s, u, 0.0), DomainError);
  std::vector<std::string> warn;
  EXPECT_NEAR(w_entropy(s, u.map([](double v) { return 3 * v; }), 1.0, &warn), w1, 1e-12);
  EXPECT_EQ(warn.size(), 1u);
}

TEST(WEntropy, MatchesHighResolutionQuadrature) {
  // Bump on the round cylinder: S = 2, dmu = 4 pi dx, tau = 0.1.
  const double tau = 0.1, w = 0.6;
  auto integrand_mass = [&](double x) { return gauss(x, 3.0, w); };
  double mass = 0.0;
  const std::size_t M = 20000;
  const double hx = kTwoPi / M;
  for (std::size_t i = 0; i < M; ++i) mass += integrand_mass(i * hx) * 4.0 * std::numbers::pi * hx;
  double ref = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    const double x = i * hx;
    const double u = gauss(x, 3.0, w) / mass;
    const double du = dgauss(x, 3.0, w) / mass;
    ref += (tau * (2.0 * u + du * du / u) - u * std::log(u) - 1.5 * std::log(4 * std::numbers::pi * tau) * u - 3 * u) *
           4.0 * std::numbers::pi * hx;
  }
  const auto s = testing_support::sphere_state(1024, constant(1.0), constant(1.0));
  const GridField u = GridField::sample(1024, kTwoPi, [&](double x) { return gauss(x, 3.0, w) / mass; });
  EXPECT_NEAR(w_entropy(s, u, tau), ref, 1e-6);
  // second order under refinement
  const auto s64 = testing_support::sphere_state(64, constant(1.0), constant(1.0));
  const auto s128 = testing_support::sphere_state(128, constant(1.0), constant(1.0));
  const double e64 = std::abs(w_entropy(s64, GridField::sample(64, kTwoPi, integrand_mass), tau) - ref);
  const double e128 = std::abs(w_entropy(s128, GridField::sample(128, kTwoPi, integrand_mass), tau) - ref);
  EXPECT_GT(e64 / e128, 4.0);
}

TEST(WDerivative, TermsBehaveAsStated) {
  const auto s = flat(128, {}, 1.0);
  const GridField u = GridField::sample(128, kTwoPi, [](double x) { return gauss(x, 3.0, 0.8); });
  const auto t = w_derivative_terms(s, u, 0.3, 0.0);
  EXPECT_GT(t.tensor, 0.0);
  EXPECT_EQ(t.map, 0.0);
  EXPECT_EQ(t.schedule, 0.0);

  const auto sp = flat(128, {[](double x) { return std::sin(x); }}, 0.7);
  const auto with = w_derivative_terms(sp, u, 0.3, -0.1);
  const auto without = w_derivative_terms(sp, u, 0.3, 0.0);
  const GridField e = grad_norm_sq(sp, sp.phi[0]);
  GridField eu = e;
  for (std::size_t i = 0; i < 128; ++i) eu[i] *= u[i];
  EXPECT_NEAR(with.total() - without.total(), 0.1 * 0.3 * integrate(sp, eu), 1e-10);
  EXPECT_GT(without.map, 0.0);
  EXPECT_THROW(w_derivative_rhs(s, GridField::constant(128, kTwoPi, 0.0), 0.3, 0.0), DomainError);
}

TEST(WSeries, StaticFlatUniform) {
  const auto s = flat(64);
  const Trajectory traj = static_trajectory(s, 1.0);
  const auto es = w_series(traj, 0.5, 1.0, {.terminal = GridField::constant(64, kTwoPi, 1.0)});
  for (const auto& r : es.records) {
    EXPECT_NEAR(r.mass, 1.0, 1e-6);
    EXPECT_NEAR(r.dW_rhs, 1.5 / r.tau, 1e-6);
    EXPECT_NEAR(r.lambda0, 0.0, 1e-9);
  }
  expect_fd_matches_rhs(es);
  EXPECT_GE(min_consecutive_difference(es.records), -1e-6);
}

TEST(WSeries, ShrinkingCylinderIsMonotone) {
  const auto s = testing_support::sphere_state(128, constant(1.0), constant(1.0));
  const Trajectory traj = run(s, AlphaSchedule::constant(1.0), 0.4, {.checkpoints = 9});
  const auto es = w_series(traj, 0.3, 0.4);
  EXPECT_GE(min_consecutive_difference(es.records), -1e-6);
  expect_fd_matches_rhs(es);
  for (const auto& r : es.records) EXPECT_NEAR(r.mass, 1.0, 1e-6);
}

TEST(WSeries, ExtendedRicciFlowDerivativeConsistency) {
  const auto s = flat(128, {[](double x) { return 0.5 * std::sin(x); }}, 1.0);
  const Trajectory traj = run(s, AlphaSchedule::constant(1.0), 0.5, {.checkpoints = 11});
  const auto es = w_series(traj, 0.3, 0.5);
  EXPECT_GE(min_consecutive_difference(es.records), -1e-6);
  expect_fd_matches_rhs(es);
}

TEST(WSeries, DecayingCouplingOnBumpyCylinder) {
  const auto s = testing_support::sphere_state(128, [](double x) { return 1.0 + 0.1 * std::cos(x); },
                                               [](double x) { return 1.0 + 0.2 * std::sin(x); }, 3,
                                               {[](double x) { return 0.4 * std::cos(x); }}, 1.0);
  const auto sched = AlphaSchedule::exponential_decay(1.0, 1.0, 0.2);
  const Trajectory traj = run(s, sched, 0.3, {.checkpoints = 7});
  const auto es = w_series(traj, 0.4, 0.3);
  EXPECT_GE(min_consecutive_difference(es.records), -1e-6);
  expect_fd_matches_rhs(es);
}

TEST(SobolevPredict, ClosedForms) {
  const auto p = sobolev_constants_predict(3, 0.0, 2.0, 0.0, 0.0, 1.0, 1.0);
  EXPECT_NEAR(p.A, std::cbrt(63.0) * 1024.0 * 2.0, 1e-9);
  EXPECT_EQ(p.B, 0.0);
  EXPECT_DOUBLE_EQ(sobolev_constants_predict(3, 5.0, 2.0, 0.0, 0.0, 1.0).A, p.A);
  const auto a1 = sobolev_constants_predict(3, 1.0, 2.0, 0.5, 0.0, 1.0);
  const auto a2 = sobolev_constants_predict(3, 2.0, 2.0, 0.5, 0.0, 1.0);
  const auto a0 = sobolev_constants_predict(3, 0.0, 2.0, 0.5, 0.0, 1.0);
  EXPECT_NEAR(a2.A / a1.A, a1.A / a0.A, 1e-12);
  EXPECT_NEAR(a1.A / a0.A, std::exp(8.0 * 0.5 / 6.0), 1e-12);
  EXPECT_THROW(sobolev_constants_predict(3, 0.0, 2.0, 0.0, 0.0, 0.0), PreconditionError);
  EXPECT_THROW(sobolev_constants_predict(3, 0.0, 2.0, 0.0, 0.0, 1.0, 2.0), DomainError);
}
