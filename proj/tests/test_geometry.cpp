#include <gtest/gtest.h>

#include <cmath>

#include "hrf/geometry.hpp"
#include "oracles/tensor_oracle.hpp"
#include "support.hpp"

using namespace hrf;
using testing_support::kTwoPi;

namespace {

double F0(double x) { return 1.0 + 0.1 * std::cos(x); }
double h0(double x) { return 1.0 + 0.2 * std::sin(x); }

// Full-coordinate metric of the warped product with a round S^{n-1} fiber,
// coordinates (x, theta_1, ..., theta_{n-1}).
oracle::Metric warped_sphere_metric(int n) {
  return [n](const oracle::Point& p) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g(0, 0) = F0(p[0]) * F0(p[0]);
    double w = h0(p[0]) * h0(p[0]);
    for (int k = 1; k < n; ++k) {
      g(k, k) = w;
      w *= std::sin(p[k]) * std::sin(p[k]);
    }
    return g;
  };
}

double b0(double x) { return 1.0 + 0.15 * std::sin(2.0 * x); }
double c0(double x) { return 1.2 + 0.1 * std::cos(x); }

oracle::Metric torus_metric() {
  return [](const oracle::Point& p) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
    g(0, 0) = F0(p[0]) * F0(p[0]);
    g(1, 1) = b0(p[0]) * b0(p[0]);
    g(2, 2) = c0(p[0]) * c0(p[0]);
    return g;
  };
}

}  // namespace

class WarpedSphereCurvature : public ::testing::TestWithParam<int> {};

TEST_P(WarpedSphereCurvature, MatchesFullTensorOracle) {
  const int n = GetParam();
  const auto state = testing_support::sphere_state(1024, F0, h0, n);
  const auto c = curvature(state);
  oracle::TensorCurvature tensor(warped_sphere_metric(n), n);
  for (std::size_t i : {0u, 100u, 333u, 700u}) {
    oracle::Point p = oracle::Point::Constant(n, std::numbers::pi / 3.0);
    p[0] = state.geom.radial_sq.x(i);
    const Eigen::MatrixXd ric = tensor.ricci(p);
    const Eigen::MatrixXd g = warped_sphere_metric(n)(p);
    EXPECT_NEAR(c.ric_radial[i], ric(0, 0) / g(0, 0), 2e-4) << "node " << i;
    for (int k = 1; k < n; ++k) EXPECT_NEAR(c.ric_fiber[0][i], ric(k, k) / g(k, k), 2e-4) << "node " << i;
    EXPECT_NEAR(c.R[i], tensor.scalar(p), 5e-4) << "node " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Dimensions, WarpedSphereCurvature, ::testing::Values(3, 4));

TEST(TorusCurvature, MatchesFullTensorOracle) {
  const auto state = testing_support::torus_state(1024, F0, b0, c0);
  const auto c = curvature(state);
  oracle::TensorCurvature tensor(torus_metric(), 3);
  for (std::size_t i : {0u, 200u, 511u, 900u}) {
    oracle::Point p(3);
    p << state.geom.radial_sq.x(i), 0.3, 0.7;
    const Eigen::MatrixXd ric = tensor.ricci(p);
    const Eigen::MatrixXd g = torus_metric()(p);
    EXPECT_NEAR(c.ric_radial[i], ric(0, 0) / g(0, 0), 2e-4);
    EXPECT_NEAR(c.ric_fiber[0][i], ric(1, 1) / g(1, 1), 2e-4);
    EXPECT_NEAR(c.ric_fiber[1][i], ric(2, 2) / g(2, 2), 2e-4);
    EXPECT_NEAR(std::abs(ric(0, 1)) + std::abs(ric(0, 2)) + std::abs(ric(1, 2)), 0.0, 1e-6);
  }
}

TEST(Curvature, ScalarEqualsFrameTrace) {
  for (int n : {3, 4, 6}) {
    const auto state = testing_support::sphere_state(64, F0, h0, n);
    const auto c = curvature(state);
    EXPECT_LT(max_abs_difference(c.R, ricci_trace(state.geom, c)), 1e-10 * (1.0 + c.R.max_abs()));
  }
  const auto torus = testing_support::torus_state(64, F0, b0, c0);
  const auto c = curvature(torus);
  EXPECT_LT(max_abs_difference(c.R, ricci_trace(torus.geom, c)), 1e-10 * (1.0 + c.R.max_abs()));
}

TEST(Curvature, RoundCylinderIsExact) {
  const double r = 0.7;
  const auto state = testing_support::sphere_state(32, testing_support::constant(1.0), testing_support::constant(r));
  const auto c = curvature(state);
  for (std::size_t i = 0; i < 32; ++i) {
    EXPECT_DOUBLE_EQ(c.ric_radial[i], 0.0);
    EXPECT_NEAR(c.ric_fiber[0][i], 1.0 / (r * r), 1e-12);
    EXPECT_NEAR(c.R[i], 2.0 / (r * r), 1e-12);
  }
}

TEST(Curvature, FlatTorusIsFlatAndSSubtractsMapEnergy) {
  const double alpha = 0.7;
  auto state = testing_support::torus_state(64, testing_support::constant(1.0), testing_support::constant(1.0),
                                            testing_support::constant(1.0), {[](double x) { return std::sin(x); }},
                                            alpha);
  const auto c = curvature(state);
  EXPECT_LT(c.R.max_abs(), 1e-14);
  const GridField e = map_energy_density(state);
  EXPECT_LT(max_abs_difference(c.S, axpy(c.R, -alpha, e)), 1e-14);
  EXPECT_LT(max_abs_difference(c.S_radial, axpy(c.ric_radial, -alpha, e)), 1e-14);
  // |d sin|^2 = cos^2 up to O(dx^2)
  for (std::size_t i = 0; i < 64; ++i) {
    const double x = state.geom.radial_sq.x(i);
    EXPECT_NEAR(c.S[i], -alpha * std::cos(x) * std::cos(x), 5e-3);
  }
}

TEST(Geometry, VolumeOfProducts) {
  const double r = 0.8;
  const auto cyl = testing_support::sphere_state(16, testing_support::constant(1.0), testing_support::constant(r));
  EXPECT_NEAR(volume(cyl.geom), kTwoPi * 4.0 * std::numbers::pi * r * r, 1e-12);
  const auto cyl4 = testing_support::sphere_state(16, testing_support::constant(1.0), testing_support::constant(r), 4);
  EXPECT_NEAR(volume(cyl4.geom), kTwoPi * 2.0 * std::numbers::pi * std::numbers::pi * r * r * r, 1e-12);
  const auto flat = testing_support::torus_state(16, testing_support::constant(1.0), testing_support::constant(1.0),
                                                 testing_support::constant(1.0));
  EXPECT_NEAR(volume(flat.geom), std::pow(kTwoPi, 3), 1e-10);
}

TEST(Geometry, UnitSphereVolumes) {
  EXPECT_NEAR(unit_sphere_volume(1), kTwoPi, 1e-14);
  EXPECT_NEAR(unit_sphere_volume(2), 4.0 * std::numbers::pi, 1e-13);
  EXPECT_NEAR(unit_sphere_volume(3), 2.0 * std::numbers::pi * std::numbers::pi, 1e-13);
}

TEST(Laplacian, SelfAdjointAndConservative) {
  const auto state = testing_support::sphere_state(96, F0, h0, 3);
  const GridField u = GridField::sample(96, kTwoPi, [](double x) { return std::exp(std::sin(2 * x)); });
  const GridField v = GridField::sample(96, kTwoPi, [](double x) { return std::cos(3 * x) + 0.5 * x * (kTwoPi - x); });
  const DiffusionOperator lap(state.geom);
  const GridField lu = lap.apply(u);
  const GridField lv = lap.apply(v);
  auto inner = [&](const GridField& a, const GridField& b) {
    GridField p = a;
    for (std::size_t i = 0; i < a.size(); ++i) p[i] *= b[i];
    return integrate(state, p);
  };
  const double scale = std::abs(inner(u, lv)) + 1.0;
  EXPECT_NEAR(inner(u, lv), inner(lu, v), 1e-12 * scale);
  EXPECT_NEAR(integrate(state, lu), 0.0, 1e-11);
  EXPECT_LT(lap.apply(GridField::constant(96, kTwoPi, 3.0)).max_abs(), 1e-12);
  EXPECT_NEAR(lap.dirichlet_energy(u.values()), -inner(u, lu), 1e-11 * scale);
  EXPECT_GT(lap.dirichlet_energy(u.values()), 0.0);
}

TEST(Laplacian, FlatModesAreDiscreteEigenvectors) {
  const std::size_t N = 128;
  const auto state = testing_support::torus_state(N, testing_support::constant(1.0), testing_support::constant(1.0),
                                                  testing_support::constant(1.0));
  const double dx = kTwoPi / N;
  for (int k : {1, 3, 7}) {
    const GridField u = GridField::sample(N, kTwoPi, [k](double x) { return std::sin(k * x); });
    const double sym = 4.0 / (dx * dx) * std::pow(std::sin(0.5 * k * dx), 2);
    EXPECT_LT(max_abs_difference(laplace_beltrami(state, u), u.map([sym](double v) { return -sym * v; })), 1e-11);
  }
}

TEST(Laplacian, SecondOrderOnWarpedGeometry) {
  // Lap u = (1/(F h^2)) (h^2 u' / F)' for the n = 3 warped product.
  auto exact = [](double x) {
    const double F = F0(x), Fp = -0.1 * std::sin(x);
    const double h = h0(x), hp = 0.2 * std::cos(x);
    const double up = 2.0 * std::cos(2 * x), upp = -4.0 * std::sin(2 * x);
    const double qp = (2.0 * h * hp * up + h * h * upp) / F - h * h * up * Fp / (F * F);
    return qp / (F * h * h);
  };
  double prev = 0.0;
  for (std::size_t N : {64u, 128u, 256u}) {
    const auto state = testing_support::sphere_state(N, F0, h0, 3);
    const GridField u = GridField::sample(N, kTwoPi, [](double x) { return std::sin(2 * x); });
    const double err = max_abs_difference(laplace_beltrami(state, u), GridField::sample(N, kTwoPi, exact));
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 0.3) << "N = " << N;
    }
    prev = err;
  }
}

TEST(Hessian, TraceApproximatesLaplacian) {
  const std::size_t N = 256;
  const auto state = testing_support::sphere_state(N, F0, h0, 3);
  const GridField u = GridField::sample(N, kTwoPi, [](double x) { return std::cos(x) + 0.3 * std::sin(3 * x); });
  const auto H = hessian_radial(state, u);
  const GridField trace = axpy(H.hess_xx, 2.0, H.hess_fiber[0]);
  EXPECT_LT(max_abs_difference(trace, laplace_beltrami(state, u)), 5e-3);
}

TEST(Geometry, RejectsInvalidInput) {
  using testing_support::constant;
  EXPECT_THROW(testing_support::sphere_state(4, constant(1.0), constant(1.0)), InvalidFieldError);
  EXPECT_THROW(testing_support::sphere_state(16, constant(1.0), [](double x) { return std::sin(x); }),
               DegenerateMetricError);
  EXPECT_THROW(testing_support::sphere_state(16, constant(1.0), constant(1.0), 2), UnsupportedDimensionError);
  EXPECT_THROW(build_geometry(Backend::DiagonalTorus, 4, 16, kTwoPi, {constant(1.0), {constant(1.0), constant(1.0)}}),
               UnsupportedDimensionError);
  const auto state = testing_support::sphere_state(16, constant(1.0), constant(1.0));
  EXPECT_THROW(laplace_beltrami(state, GridField::constant(32, kTwoPi, 1.0)), GridMismatchError);
  GridField bad = GridField::constant(16, kTwoPi, 1.0);
  bad[3] = std::nan("");
  auto s2 = state;
  s2.phi.push_back(bad);
  EXPECT_THROW(curvature(s2), InvalidFieldError);
  EXPECT_THROW(parse_backend("klein-bottle"), ConfigError);
}
