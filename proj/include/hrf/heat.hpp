#pragma once

// Heat equations along a precomputed flow.
//
//   forward     d/dt u = Lap_{g(t)} u
//   conjugate   d/dt u = S u - Lap_{g(t)} u     (solved backward from t1 to s)
//
// Both are marched with explicit RK4 through the trajectory's sample
// intervals, evaluating the geometry at every stage time.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hrf/errors.hpp"
#include "hrf/field_series.hpp"
#include "hrf/flow.hpp"
#include "hrf/geometry.hpp"
#include "hrf/moser.hpp"

namespace hrf {

namespace detail {

struct HeatStage {
  DiffusionOperator lap;
  std::optional<GridField> S;  // present for the conjugate equation
};

inline HeatStage heat_stage(const Trajectory& traj, double t, bool conjugate) {
  const CoupledState st = traj.state_at(t);
  HeatStage h{DiffusionOperator(st.geom), std::nullopt};
  if (conjugate) h.S = curvature(st).S;
  return h;
}

/// Rate of the forward (conjugate == false) or conjugate equation at a stage.
inline GridField heat_rate(const HeatStage& h, const GridField& u) {
  GridField r = h.lap.apply(u);
  if (!h.S) return r;
  for (std::size_t i = 0; i < u.size(); ++i) r[i] = (*h.S)[i] * u[i] - r[i];
  return r;
}

inline double stable_step(const HeatStage& h) {
  double bound = h.lap.spectral_bound();
  if (h.S) bound += h.S->max_abs();
  return 0.8 * 2.5 / bound;
}

/// Marches u from a to b (either direction) with enough RK4 substeps.
inline GridField march(const Trajectory& traj, GridField u, double a, double b, bool conjugate) {
  if (a == b) return u;
  const HeatStage ha = heat_stage(traj, a, conjugate);
  const HeatStage hb = heat_stage(traj, b, conjugate);
  const double limit = std::min(stable_step(ha), stable_step(hb));
  const auto steps = static_cast<std::size_t>(std::ceil(std::abs(b - a) / limit));
  const double h = (b - a) / static_cast<double>(std::max<std::size_t>(steps, 1));
  double t = a;
  std::optional<HeatStage> start(ha);
  for (std::size_t k = 0; k < std::max<std::size_t>(steps, 1); ++k) {
    const bool last = k + 1 == std::max<std::size_t>(steps, 1);
    const double t_next = last ? b : t + h;
    const HeatStage mid = heat_stage(traj, t + 0.5 * h, conjugate);
    const HeatStage end = last ? hb : heat_stage(traj, t_next, conjugate);
    const GridField k1 = heat_rate(*start, u);
    const GridField k2 = heat_rate(mid, axpy(u, 0.5 * h, k1));
    const GridField k3 = heat_rate(mid, axpy(u, 0.5 * h, k2));
    const GridField k4 = heat_rate(end, axpy(u, h, k3));
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = t_next;
    start.emplace(end);
  }
  return u;
}

/// Output times: s, the checkpoints strictly inside (s, t1), and t1.
inline std::vector<double> default_output_times(const Trajectory& traj, double s, double t1) {
  std::vector<double> out{s};
  for (const auto& c : traj.checkpoints()) {
    if (c.t > s + 1e-12 && c.t < t1 - 1e-12) out.push_back(c.t);
  }
  out.push_back(t1);
  return out;
}

/// Output times merged with the flow's sample times, so every march stays
/// inside one Hermite interval.
inline std::vector<double> march_nodes(const Trajectory& traj, const std::vector<double>& outputs) {
  std::vector<double> nodes = outputs;
  const auto inner = traj.sample_times_between(outputs.front(), outputs.back());
  nodes.insert(nodes.end(), inner.begin(), inner.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-13 * std::max(1.0, std::abs(x)); }),
              nodes.end());
  return nodes;
}

inline void check_span(const Trajectory& traj, double s, double t1) {
  const double slack = 1e-12 * std::max(1.0, std::abs(traj.t_end()));
  if (!(s < t1)) throw DomainError("heat solve needs s < t1");
  if (s < traj.t_start() - slack || t1 > traj.t_end() + slack) {
    throw DomainError("heat solve interval lies outside the trajectory span");
  }
}

inline void check_times(const std::vector<double>& times, double s, double t1) {
  if (times.size() < 2 || times.front() != s || times.back() != t1) {
    throw DomainError("output times must start at s and end at t1");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw DomainError("output times must increase");
  }
}

}  // namespace detail

/// Solves the forward heat equation from u0 at time s to t1. Output at s,
/// every interior checkpoint, and t1 unless `times` is given.
inline FieldSeries heat_forward(const Trajectory& traj, const GridField& u0, double s, double t1,
                                std::vector<double> times = {}) {
  detail::check_span(traj, s, t1);
  require_finite(u0, "initial datum");
  const CoupledState start = traj.state_at(s);
  require_same_grid(start.geom.radial_sq, u0, "heat_forward");
  if (times.empty()) times = detail::default_output_times(traj, s, t1);
  detail::check_times(times, s, t1);

  const auto nodes = detail::march_nodes(traj, times);
  FieldSeries out;
  GridField u = u0;
  std::size_t next = 0;
  auto record = [&](double t) {
    out.times.push_back(t);
    out.fields.push_back(u);
    out.masses.push_back(integrate(traj.state_at(t), u));
  };
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (k > 0) u = detail::march(traj, u, nodes[k - 1], nodes[k], false);
    if (!u.all_finite()) throw SolverError("heat solution became non-finite");
    if (next < times.size() && std::abs(nodes[k] - times[next]) <= 1e-13 * std::max(1.0, std::abs(nodes[k]))) {
      record(times[next]);
      ++next;
    }
  }
  return out;
}

/// Solves the conjugate heat equation backward from u_end at t1 to s. The
/// terminal datum is clamped to be nonnegative and rescaled to unit mass in
/// dmu(g(t1)); either adjustment is reported as a warning. Output is ordered by
/// increasing time.
inline FieldSeries conjugate_backward(const Trajectory& traj, const GridField& u_end, double t1, double s,
                                      std::vector<double> times = {}) {
  detail::check_span(traj, s, t1);
  require_finite(u_end, "terminal datum");
  const CoupledState final_state = traj.state_at(t1);
  require_same_grid(final_state.geom.radial_sq, u_end, "conjugate_backward");
  if (times.empty()) times = detail::default_output_times(traj, s, t1);
  detail::check_times(times, s, t1);

  FieldSeries out;
  GridField u = u_end;
  if (u.min() < 0.0) {
    u = u.map([](double v) { return std::max(v, 0.0); });
    out.warnings.push_back("terminal datum had negative values; clamped to zero");
  }
  const double m = integrate(final_state, u);
  if (!(m > 0.0)) throw PreconditionError("terminal datum has zero mass");
  if (std::abs(m - 1.0) > 1e-10) {
    u = u.map([m](double v) { return v / m; });
    out.warnings.push_back("terminal datum renormalized to unit mass (was " + std::to_string(m) + ")");
  }
  const double sup0 = u.max_abs();

  const auto nodes = detail::march_nodes(traj, times);
  std::vector<GridField> fields(times.size());
  std::vector<double> masses(times.size());
  std::size_t next = times.size();  // fill from the back
  for (std::size_t k = nodes.size(); k-- > 0;) {
    if (k + 1 < nodes.size()) u = detail::march(traj, u, nodes[k + 1], nodes[k], true);
    if (!u.all_finite() || u.max_abs() > 1e6 * sup0) {
      throw SolverError("conjugate heat solution is unstable near t = " + std::to_string(nodes[k]));
    }
    if (next > 0 && std::abs(nodes[k] - times[next - 1]) <= 1e-13 * std::max(1.0, std::abs(nodes[k]))) {
      --next;
      fields[next] = u;
      masses[next] = integrate(traj.state_at(times[next]), u);
    }
  }
  out.times = times;
  out.fields = std::move(fields);
  out.masses = std::move(masses);
  return out;
}

/// Mollified heat kernel G(., t; y, s): forward solution started from a
/// periodic Gaussian of width sigma centred at node y, normalized to unit
/// mass in dmu(g(s)). In the reduced setting this is the kernel averaged
/// over the fiber orbit of y.
struct HeatKernelEstimate {
  std::size_t source = 0;
  double s = 0.0;
  double width = 0.0;
  bool extrapolated = false;
  FieldSeries series;
};

inline GridField mollifier(const CoupledState& at, std::size_t node, double width) {
  const double L = at.geom.period();
  const double y = at.geom.radial_sq.x(node);
  GridField bump = GridField::sample(at.geom.nodes(), L, [&](double x) {
    double v = 0.0;
    for (int m = -2; m <= 2; ++m) {
      const double d = x - y - m * L;
      v += std::exp(-0.5 * d * d / (width * width));
    }
    return v;
  });
  const double mass = integrate(at, bump);
  return bump.map([mass](double v) { return v / mass; });
}

inline HeatKernelEstimate heat_kernel(const Trajectory& traj, std::size_t y, double s, double width,
                                      std::optional<double> t1 = std::nullopt, std::vector<double> times = {}) {
  const CoupledState at = traj.state_at(s);
  if (y >= at.geom.nodes()) throw DomainError("kernel source node out of range");
  const double dx = at.geom.spacing();
  if (!(width >= 2.0 * dx * (1.0 - 1e-12))) {
    throw ResolutionError("mollifier width " + std::to_string(width) + " is below two grid spacings (" +
                          std::to_string(2.0 * dx) + ")");
  }
  HeatKernelEstimate k;
  k.source = y;
  k.s = s;
  k.width = width;
  k.series = heat_forward(traj, mollifier(at, y, width), s, t1.value_or(traj.t_end()), std::move(times));
  return k;
}

/// Richardson combination (4 G_{sigma/2} - G_sigma)/3, which cancels the
/// O(sigma^2) mollification bias. Needs sigma/2 >= 2 dx.
inline HeatKernelEstimate heat_kernel_extrapolated(const Trajectory& traj, std::size_t y, double s, double width,
                                                   std::optional<double> t1 = std::nullopt,
                                                   std::vector<double> times = {}) {
  HeatKernelEstimate coarse = heat_kernel(traj, y, s, width, t1, times);
  const HeatKernelEstimate fine = heat_kernel(traj, y, s, 0.5 * width, t1, coarse.series.times);
  for (std::size_t k = 0; k < coarse.series.size(); ++k) {
    GridField& g = coarse.series.fields[k];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (4.0 * fine.series.fields[k][i] - g[i]) / 3.0;
    coarse.series.masses[k] = (4.0 * fine.series.masses[k] - coarse.series.masses[k]) / 3.0;
  }
  coarse.extrapolated = true;
  return coarse;
}

struct KernelBoundEntry {
  double t = 0.0;
  double elapsed = 0.0;  // t - s
  double sup_G = 0.0;
  double scaled = 0.0;  // sup_G (t - s)^{n/2}
  double mass = 0.0;
  bool bound_checked = false;
  bool bound_pass = true;
  bool mass_pass = true;
};

struct KernelBoundReport {
  double constant = 0.0;  // C(n, A, B, S0, T)
  double horizon = 0.0;   // T - s
  std::vector<KernelBoundEntry> entries;
  std::vector<double> excluded_times;  // t - s < 10 sigma^2
  bool pass = true;
};

/// Constant of the on-diagonal bound G(x, t; y, s) <= C (t - s)^{-n/2} from the
/// p = 1 Moser constants: C = ((C_B + C0_neg S0) T + C2)^{(n+2)/2} e^{S0 T}
/// with T the horizon of the trajectory after s.
inline double kernel_bound_constant(const MoserConstants& c, double S0, double horizon) {
  return std::pow((c.C_B + c.C0_neg * S0) * horizon + c.C2, c.exponent()) * std::exp(S0 * horizon);
}

/// Checks the on-diagonal bound where t - s >= 10 sigma^2 and the mass law:
/// non-increasing when S0 == 0, at most e^{S0 (t - s)} otherwise.
inline KernelBoundReport kernel_bound_check(const HeatKernelEstimate& k, const Trajectory& traj,
                                            const std::optional<MoserConstants>& constants, double S0) {
  if (!constants) throw PreconditionError("kernel bound needs Sobolev-derived Moser constants");
  if (std::abs(constants->p - 1.0) > 1e-12) throw PreconditionError("kernel bound needs p = 1 Moser constants");
  if (!(S0 >= 0.0)) throw DomainError("S0 must be nonnegative");
  KernelBoundReport rep;
  rep.horizon = traj.t_end() - k.s;
  rep.constant = kernel_bound_constant(*constants, S0, rep.horizon);
  const int n = constants->n;
  const double min_elapsed = 10.0 * k.width * k.width;
  for (std::size_t j = 0; j < k.series.size(); ++j) {
    KernelBoundEntry e;
    e.t = k.series.times[j];
    e.elapsed = e.t - k.s;
    e.sup_G = k.series.fields[j].max();
    e.mass = k.series.masses[j];
    e.scaled = e.sup_G * std::pow(e.elapsed, 0.5 * n);
    const double limit = S0 == 0.0 ? 1.0 : std::exp(S0 * e.elapsed);
    e.mass_pass = e.mass <= limit + 1e-6;
    if (e.elapsed >= min_elapsed) {
      e.bound_checked = true;
      e.bound_pass = e.scaled <= rep.constant;
    } else if (e.elapsed > 0.0) {
      rep.excluded_times.push_back(e.t);
    }
    rep.pass = rep.pass && e.mass_pass && e.bound_pass;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace hrf
