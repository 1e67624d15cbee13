#pragma once

// W-entropy of (g, u, tau) along the flow,
//
//   W = int [ tau (S u + |grad u|^2 / u) - u ln u - (n/2) ln(4 pi tau) u - n u ] dmu,
//
// its time derivative integrand
//
//   dW/dt = int [ 2 tau |S_ij + Hess_ij f - g_ij/(2 tau)|^2
//                 + 2 tau alpha |tau_g phi - <grad phi, grad f>|^2
//                 - tau alpha' |grad phi|^2 ] u dmu,    f = -ln u - (n/2) ln(4 pi tau),
//
// and the uniform Sobolev constants predicted along the flow.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hrf/errors.hpp"
#include "hrf/flow.hpp"
#include "hrf/geometry.hpp"
#include "hrf/heat.hpp"
#include "hrf/spectral.hpp"

namespace hrf {

/// Quadrature of the W integrand. u is clamped at zero and normalized to unit
/// mass (a warning is appended when that changes u). |grad u|^2/u uses a
/// fourth-order centered derivative and is taken as 0 where u vanishes.
inline double w_entropy(const CoupledState& state, GridField u, double tau,
                        std::vector<std::string>* warnings = nullptr) {
  if (!(tau > 0.0)) throw DomainError("W entropy needs tau > 0");
  require_same_grid(state.geom.radial_sq, u, "w_entropy");
  require_finite(u, "entropy density");
  if (u.min() < 0.0) {
    u = u.map([](double v) { return std::max(v, 0.0); });
    if (warnings) warnings->push_back("entropy density clamped at zero");
  }
  const double mass = integrate(state, u);
  if (!(mass > 0.0)) throw DomainError("entropy density has zero mass");
  if (std::abs(mass - 1.0) > 1e-10) {
    u = u.map([mass](double v) { return v / mass; });
    if (warnings) warnings->push_back("entropy density renormalized (mass " + std::to_string(mass) + ")");
  }
  const int n = state.geom.n;
  const GridField S = curvature(state).S;
  const std::size_t N = u.size();
  const double dx = u.spacing();
  GridField pointwise = u;
  for (std::size_t i = 0; i < N; ++i) {
    const double v = u[i];
    const auto at = [&](std::ptrdiff_t o) { return u.wrapped(static_cast<std::ptrdiff_t>(i) + o); };
    const double du = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dx);
    const double fisher = v > 0.0 ? du * du / (state.geom.radial_sq[i] * v) : 0.0;
    pointwise[i] = tau * (S[i] * v + fisher) - (v > 0.0 ? v * std::log(v) : 0.0) -
                   (0.5 * n * std::log(4.0 * std::numbers::pi * tau) + n) * v;
  }
  return integrate(state, pointwise);
}

struct WDerivativeTerms {
  double tensor = 0.0;    // int 2 tau |S + Hess f - g/(2 tau)|^2 u
  double map = 0.0;       // int 2 tau alpha sum_c |tau_g phi_c - <grad phi_c, grad f>|^2 u
  double schedule = 0.0;  // - tau alpha' int |grad phi|^2 u
  std::size_t skipped_nodes = 0;

  double total() const { return tensor + map + schedule; }
};

inline WDerivativeTerms w_derivative_terms(const CoupledState& state, const GridField& u, double tau,
                                           double alpha_dot) {
  if (!(tau > 0.0)) throw DomainError("W derivative needs tau > 0");
  require_same_grid(state.geom.radial_sq, u, "w_derivative_rhs");
  const double top = u.max();
  if (!(top > 0.0)) throw DomainError("W derivative needs a nonzero density");
  const int n = state.geom.n;
  const std::size_t N = u.size();
  const double cutoff = 1e-14 * top;

  // f only enters through derivatives; floor u to keep the log finite.
  const GridField f = u.map([&](double v) {
    return -std::log(std::max(v, cutoff)) - 0.5 * n * std::log(4.0 * std::numbers::pi * tau);
  });
  const CurvatureReport c = curvature(state);
  const HessianRadial H = hessian_radial(state, f);
  const DiffusionOperator lap(state.geom);
  const auto df = detail::centered_derivative(f);
  const GridField rho = lap.density();
  const double dx = state.geom.spacing();

  std::vector<GridField> tension;
  std::vector<std::vector<double>> dphi;
  for (const auto& comp : state.phi) {
    tension.push_back(lap.apply(comp));
    dphi.push_back(detail::centered_derivative(comp));
  }
  const GridField energy = map_energy_density(state);

  WDerivativeTerms out;
  const double half_inv_tau = 0.5 / tau;
  for (std::size_t i = 0; i < N; ++i) {
    if (u[i] < cutoff) {
      ++out.skipped_nodes;
      continue;
    }
    const double w = u[i] * rho[i] * dx;
    const double Tss = c.S_radial[i] + H.hess_xx[i] - half_inv_tau;
    double norm = Tss * Tss;
    for (std::size_t j = 0; j < state.geom.fibers.size(); ++j) {
      const double Tj = c.S_fiber[j][i] + H.hess_fiber[j][i] - half_inv_tau;
      norm += state.geom.fibers[j].dim * Tj * Tj;
    }
    out.tensor += 2.0 * tau * norm * w;
    for (std::size_t k = 0; k < state.phi.size(); ++k) {
      const double d = tension[k][i] - dphi[k][i] * df[i] / state.geom.radial_sq[i];
      out.map += 2.0 * tau * state.alpha * d * d * w;
    }
    out.schedule -= tau * alpha_dot * energy[i] * w;
  }
  return out;
}

inline double w_derivative_rhs(const CoupledState& state, const GridField& u, double tau, double alpha_dot) {
  return w_derivative_terms(state, u, tau, alpha_dot).total();
}

struct EntropyRecord {
  double t = 0.0;
  double tau = 0.0;
  double W = 0.0;
  double dW_fd = 0.0;  // centered difference at interior points, one-sided at the ends
  double dW_rhs = 0.0;
  double lambda0 = 0.0;
  double mass = 0.0;
  bool interior = false;
};

struct EntropySeriesOptions {
  std::size_t points = 41;    // uniform evaluation times in [0, t0]
  double bump_width = 0.5;    // terminal Gaussian width in x units
  double bump_center = 0.0;   // x position of the terminal bump
  std::optional<GridField> terminal;  // replaces the bump when set
};

struct EntropySeries {
  double epsilon = 0.0;
  double t0 = 0.0;
  std::vector<EntropyRecord> records;
  std::vector<std::string> warnings;
};

/// Terminal data: a normalized periodic Gaussian at t0. Solves the conjugate
/// heat equation back to the trajectory start and evaluates W with
/// tau(t) = eps^2 + t0 - t.
inline EntropySeries w_series(const Trajectory& traj, double eps, double t0, const EntropySeriesOptions& opt = {}) {
  if (!(eps > 0.0)) throw DomainError("w_series needs eps > 0");
  const double t_start = traj.t_start();
  if (!(t0 > t_start) || t0 > traj.t_end() + 1e-12 * std::max(1.0, traj.t_end())) {
    throw DomainError("t0 must lie inside the trajectory span");
  }
  if (opt.points < 3) throw DomainError("w_series needs at least three evaluation times");
  std::vector<double> times(opt.points);
  for (std::size_t k = 0; k < opt.points; ++k) {
    times[k] = t_start + (t0 - t_start) * static_cast<double>(k) / static_cast<double>(opt.points - 1);
  }
  times.back() = t0;

  const CoupledState final_state = traj.state_at(t0);
  const double L = final_state.geom.period();
  GridField bump = opt.terminal ? *opt.terminal : GridField::sample(final_state.geom.nodes(), L, [&](double x) {
    double v = 0.0;
    for (int m = -2; m <= 2; ++m) {
      const double d = x - opt.bump_center - m * L;
      v += std::exp(-0.5 * d * d / (opt.bump_width * opt.bump_width));
    }
    return v;
  });
  const double m0 = integrate(final_state, bump);
  bump = bump.map([m0](double v) { return v / m0; });
  const FieldSeries sol = conjugate_backward(traj, bump, t0, t_start, times);

  EntropySeries out;
  out.epsilon = eps;
  out.t0 = t0;
  out.warnings = sol.warnings;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    const CoupledState st = traj.state_at(sol.times[k]);
    EntropyRecord r;
    r.t = sol.times[k];
    r.tau = eps * eps + t0 - r.t;
    r.mass = sol.masses[k];
    r.W = w_entropy(st, sol.fields[k], r.tau);
    r.dW_rhs = w_derivative_rhs(st, sol.fields[k], r.tau, traj.schedule().derivative(r.t));
    r.lambda0 = f_entropy_lambda0(st).lambda;
    out.records.push_back(r);
  }
  auto& rec = out.records;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == rec.size() ? k : k + 1;
    rec[k].dW_fd = (rec[b].W - rec[a].W) / (rec[b].t - rec[a].t);
    rec[k].interior = k > 0 && k + 1 < rec.size();
  }
  return out;
}

/// Smallest consecutive difference W_{k+1} - W_k.
inline double min_consecutive_difference(const std::vector<EntropyRecord>& rec) {
  double m = INFINITY;
  for (std::size_t k = 1; k < rec.size(); ++k) m = std::min(m, rec[k].W - rec[k - 1].W);
  return m;
}

struct SobolevPrediction {
  double A = 0.0;
  double B = 0.0;
};

/// A(t) = (2^q - 1)^{2/q} 2^{2(q-s)/(2-s)} e^{8 t B0/(n A0)} (1 + A0 S0/(4 lambda1_0)) A0,
/// B(t) the same with B0 in place of the final A0.
inline SobolevPrediction sobolev_constants_predict(int n, double t, double A0, double B0, double S0, double lambda1_0,
                                                   double s_param = 1.0) {
  if (n < 3) throw UnsupportedDimensionError("Sobolev prediction needs n >= 3");
  if (!(lambda1_0 > 0.0)) throw PreconditionError("lambda_1(0) must be positive");
  if (!(s_param > 0.0 && s_param < 2.0)) throw DomainError("s must lie in (0, 2)");
  if (!(A0 > 0.0) || B0 < 0.0 || S0 < 0.0 || t < 0.0) throw DomainError("Sobolev prediction inputs out of range");
  const double q = sobolev_exponent(n);
  const double factor = std::pow(std::pow(2.0, q) - 1.0, 2.0 / q) * std::pow(2.0, 2.0 * (q - s_param) / (2.0 - s_param)) *
                        std::exp(8.0 * t * B0 / (n * A0)) * (1.0 + A0 * S0 / (4.0 * lambda1_0));
  return {factor * A0, factor * B0};
}

}  // namespace hrf
