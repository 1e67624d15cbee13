#include <gtest/gtest.h>

#include <cmath>

#include "hrf/heat.hpp"
#include "oracles/spectral_sum.hpp"
#include "support.hpp"

using namespace hrf;
using testing_support::constant;
using testing_support::kTwoPi;

namespace {

Trajectory static_flat(std::size_t N, double T) {
  auto s0 = testing_support::torus_state(N, constant(1.0), constant(1.0), constant(1.0));
  auto s1 = s0;
  s1.t = T;
  return Trajectory::from_states({s0, s1}, AlphaSchedule::constant(1.0));
}

Trajectory bumpy_flow(std::size_t N, double T) {
  auto s0 = testing_support::sphere_state(N, [](double x) { return 1.0 + 0.1 * std::cos(x); },
                                          [](double x) { return 1.0 + 0.2 * std::sin(x); }, 3,
                                          {[](double x) { return 0.3 * std::sin(x); }}, 0.5);
  return run(s0, AlphaSchedule::constant(0.5), T, {.checkpoints = 6});
}

double inner(const CoupledState& s, const GridField& a, const GridField& b) {
  GridField p = a;
  for (std::size_t i = 0; i < a.size(); ++i) p[i] *= b[i];
  return integrate(s, p);
}

}  // namespace

TEST(HeatForward, FlatModeDecayMatchesDiscreteSymbol) {
  const std::size_t N = 128;
  const Trajectory traj = static_flat(N, 1.0);
  const double dx = kTwoPi / N;
  for (int k : {1, 2, 4}) {
    const GridField u0 = GridField::sample(N, kTwoPi, [k](double x) { return 1.0 + std::sin(k * x); });
    const FieldSeries sol = heat_forward(traj, u0, 0.0, 1.0, {0.0, 0.25, 0.5, 1.0});
    const double sym = 4.0 / (dx * dx) * std::pow(std::sin(0.5 * k * dx), 2);
    for (std::size_t j = 0; j < sol.size(); ++j) {
      const double t = sol.times[j];
      const GridField discrete =
          GridField::sample(N, kTwoPi, [&](double x) { return 1.0 + std::exp(-sym * t) * std::sin(k * x); });
      const GridField continuum =
          GridField::sample(N, kTwoPi, [&](double x) { return 1.0 + std::exp(-k * k * t) * std::sin(k * x); });
      EXPECT_LT(max_abs_difference(sol.fields[j], discrete), 1e-6) << "k=" << k << " t=" << t;
      EXPECT_LT(max_abs_difference(sol.fields[j], continuum), k * k * k * k * dx * dx / 12.0 * t + 1e-9);
      EXPECT_NEAR(sol.masses[j], sol.masses[0], 1e-12);
    }
  }
}

TEST(HeatForward, MaximumPrinciple) {
  const Trajectory traj = bumpy_flow(64, 0.1);
  const GridField u0 = GridField::sample(64, kTwoPi, [](double x) { return std::exp(std::cos(3 * x)); });
  const FieldSeries sol = heat_forward(traj, u0, 0.0, 0.1);
  for (const auto& u : sol.fields) {
    EXPECT_LE(u.max(), u0.max() + 1e-12);
    EXPECT_GE(u.min(), u0.min() - 1e-12);
  }
  EXPECT_EQ(sol.times.size(), traj.checkpoints().size());
}

TEST(ConjugateHeat, ConservesMassAlongFlow) {
  const Trajectory traj = bumpy_flow(96, 0.2);
  const GridField u1 = GridField::sample(96, kTwoPi, [](double x) { return std::exp(-4.0 * (1 - std::cos(x - 1.0))); });
  const FieldSeries sol = conjugate_backward(traj, u1, 0.2, 0.0);
  ASSERT_EQ(sol.times.front(), 0.0);
  ASSERT_EQ(sol.times.back(), 0.2);
  EXPECT_EQ(sol.warnings.size(), 1u);  // renormalized
  for (double m : sol.masses) EXPECT_NEAR(m, 1.0, 1e-6);
}

TEST(ConjugateHeat, IsDualToForwardHeat) {
  // d/dt int u v dmu = 0 for forward u and conjugate v.
  const Trajectory traj = bumpy_flow(96, 0.2);
  const GridField u0 = GridField::sample(96, kTwoPi, [](double x) { return 2.0 + std::sin(2 * x); });
  const GridField v1 = GridField::sample(96, kTwoPi, [](double x) { return 1.0 + 0.5 * std::cos(x); });
  const FieldSeries u = heat_forward(traj, u0, 0.0, 0.2);
  const FieldSeries v = conjugate_backward(traj, v1, 0.2, 0.0);
  const double start = inner(traj.state_at(0.0), u.fields.front(), v.fields.front());
  for (std::size_t j = 0; j < u.size(); ++j) {
    EXPECT_NEAR(inner(traj.state_at(u.times[j]), u.fields[j], v.fields[j]), start, 1e-6);
  }
}

TEST(ConjugateHeat, ClampsNegativeData) {
  const Trajectory traj = static_flat(32, 0.1);
  GridField u1 = GridField::constant(32, kTwoPi, 1.0);
  u1[0] = -2.0;
  const FieldSeries sol = conjugate_backward(traj, u1, 0.1, 0.0);
  EXPECT_EQ(sol.warnings.size(), 2u);
  EXPECT_GE(sol.fields.back().min(), 0.0);
  EXPECT_THROW(conjugate_backward(traj, GridField::constant(32, kTwoPi, -1.0), 0.1, 0.0), PreconditionError);
  EXPECT_THROW(conjugate_backward(traj, u1, 0.0, 0.1), DomainError);
}

TEST(HeatKernel, MatchesSpectralSumOnFlatTorus) {
  const std::size_t N = 128;
  const Trajectory traj = static_flat(N, 1.0);
  const double dx = kTwoPi / N;
  const double sigma = 4.0 * dx;
  const double vol = std::pow(kTwoPi, 3);
  const HeatKernelEstimate k = heat_kernel(traj, 40, 0.0, sigma, 1.0, {0.0, 0.1, 0.5, 1.0});
  for (std::size_t j = 1; j < k.series.size(); ++j) {
    const double t = k.series.times[j];
    double err = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double ref = oracle::flat_kernel(i * dx, 40 * dx, t, kTwoPi, vol, sigma);
      err = std::max(err, std::abs(k.series.fields[j][i] - ref));
      peak = std::max(peak, ref);
    }
    EXPECT_LT(err, 1e-4) << "t = " << t;
    EXPECT_LT(err / peak, 2e-3);
    EXPECT_NEAR(k.series.masses[j], 1.0, 1e-10);
  }
}

TEST(HeatKernel, RichardsonEstimateConvergesInWidth) {
  const std::size_t N = 128;
  const Trajectory traj = static_flat(N, 2.0);
  const double dx = kTwoPi / N;
  const double sigma = 8.0 * dx;
  const double t = 10.0 * sigma * sigma;
  const HeatKernelEstimate coarse = heat_kernel_extrapolated(traj, 0, 0.0, sigma, t, {0.0, t});
  const HeatKernelEstimate fine = heat_kernel_extrapolated(traj, 0, 0.0, 0.5 * sigma, t, {0.0, t});
  const double rel = max_abs_difference(coarse.series.fields.back(), fine.series.fields.back()) /
                     fine.series.fields.back().max();
  EXPECT_LT(rel, 1e-3);
  EXPECT_TRUE(coarse.extrapolated);
}

TEST(HeatKernel, RejectsUnderresolvedMollifier) {
  const Trajectory traj = static_flat(64, 1.0);
  EXPECT_THROW(heat_kernel(traj, 0, 0.0, kTwoPi / 64), ResolutionError);
  EXPECT_THROW(heat_kernel(traj, 64, 0.0, 0.5), DomainError);
}

TEST(KernelBound, FlatTorusSatisfiesBoundAndConservesMass) {
  const std::size_t N = 128;
  const Trajectory traj = static_flat(N, 1.0);
  const double sigma = 4.0 * kTwoPi / N;
  const HeatKernelEstimate k = heat_kernel(traj, 0, 0.0, sigma, 1.0, {0.0, 0.01, 0.1, 0.5, 1.0});
  const double vol = std::pow(kTwoPi, 3);
  const auto c = moser_constants(3, 1.0, 1.0, 2.0 * std::pow(vol, -2.0 / 3.0));
  const KernelBoundReport rep = kernel_bound_check(k, traj, c, 0.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.excluded_times.size(), 2u);  // 10 sigma^2 = 0.385
  for (const auto& e : rep.entries) EXPECT_LE(e.mass, 1.0 + 1e-6);
  EXPECT_THROW(kernel_bound_check(k, traj, std::nullopt, 0.0), PreconditionError);
  EXPECT_THROW(kernel_bound_check(k, traj, moser_constants(3, 2.0, 1.0), 0.0), PreconditionError);
}

TEST(KernelBound, DetectsViolation) {
  const std::size_t N = 128;
  const Trajectory traj = static_flat(N, 1.0);
  HeatKernelEstimate k = heat_kernel(traj, 0, 0.0, 4.0 * kTwoPi / N, 1.0, {0.0, 1.0});
  k.series.fields.back()[3] = 1e12;
  EXPECT_FALSE(kernel_bound_check(k, traj, moser_constants(3, 1.0, 1.0), 0.0).pass);
}
