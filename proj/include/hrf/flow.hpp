#pragma once

// Method-of-lines integration of the harmonic-Ricci flow
//
//   d/dt g = -2 Ric + 2 alpha(t) dphi (x) dphi,   d/dt phi = tau_g phi,
//
// inside the reduced ansatz. The state variables are the squared metric
// coefficients, whose rates in the orthonormal frame are
//
//   d/dt F^2   = -2 F^2 Ric_ss + 2 alpha sum_c (phi_c')^2
//   d/dt h_j^2 = -2 h_j^2 Ric_j
//
// and the map components evolve by the Laplace-Beltrami operator (flat target).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hrf/errors.hpp"
#include "hrf/geometry.hpp"
#include "hrf/schedule.hpp"

namespace hrf {

struct FlowRates {
  GridField radial_sq;
  std::vector<GridField> warp_sq;
  std::vector<GridField> phi;
};

inline FlowRates flow_rhs(const CoupledState& state) {
  const CurvatureReport c = curvature(state);
  const ReducedGeometry& g = state.geom;
  FlowRates r;
  r.radial_sq = g.radial_sq;
  for (std::size_t i = 0; i < g.nodes(); ++i) r.radial_sq[i] = -2.0 * g.radial_sq[i] * c.ric_radial[i];
  for (const auto& comp : state.phi) {
    const auto d = detail::centered_derivative(comp);
    for (std::size_t i = 0; i < g.nodes(); ++i) r.radial_sq[i] += 2.0 * state.alpha * d[i] * d[i];
  }
  for (std::size_t j = 0; j < g.fibers.size(); ++j) {
    GridField w = g.fibers[j].warp_sq;
    for (std::size_t i = 0; i < g.nodes(); ++i) w[i] = -2.0 * g.fibers[j].warp_sq[i] * c.ric_fiber[j][i];
    r.warp_sq.push_back(std::move(w));
  }
  const DiffusionOperator lap(g);
  for (const auto& comp : state.phi) r.phi.push_back(lap.apply(comp));
  return r;
}

/// Raised when the integrator produces non-finite values.
class IntegrationFailure : public SolverError {
 public:
  IntegrationFailure(const std::string& what, CoupledState last_good)
      : SolverError(what), last_good_(std::move(last_good)) {}
  const CoupledState& last_good() const { return last_good_; }

 private:
  CoupledState last_good_;
};

/// Raised when the flow degenerates before a single step could be taken.
class BlowUpError : public SolverError {
 public:
  using SolverError::SolverError;
};

namespace detail {

/// Flat packing of (F^2, h_j^2..., phi_c...) used by the time steppers.
inline std::vector<double> pack(const CoupledState& s) {
  const std::size_t n = s.geom.nodes();
  std::vector<double> y;
  y.reserve(n * (1 + s.geom.fibers.size() + s.phi.size()));
  auto append = [&](const GridField& f) { y.insert(y.end(), f.values().begin(), f.values().end()); };
  append(s.geom.radial_sq);
  for (const auto& f : s.geom.fibers) append(f.warp_sq);
  for (const auto& c : s.phi) append(c);
  return y;
}

inline std::vector<double> pack(const FlowRates& r) {
  std::vector<double> y;
  auto append = [&](const GridField& f) { y.insert(y.end(), f.values().begin(), f.values().end()); };
  append(r.radial_sq);
  for (const auto& f : r.warp_sq) append(f);
  for (const auto& c : r.phi) append(c);
  return y;
}

/// Writes packed values into a copy of the layout state.
inline CoupledState unpack(const std::vector<double>& y, const CoupledState& layout, double t, double alpha) {
  CoupledState s = layout;
  const std::size_t n = layout.geom.nodes();
  std::size_t off = 0;
  auto take = [&](GridField& f) {
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(off), y.begin() + static_cast<std::ptrdiff_t>(off + n),
              f.values().begin());
    off += n;
  };
  take(s.geom.radial_sq);
  for (auto& f : s.geom.fibers) take(f.warp_sq);
  for (auto& c : s.phi) take(c);
  s.t = t;
  s.alpha = alpha;
  return s;
}

inline std::size_t metric_entries(const CoupledState& layout) {
  return layout.geom.nodes() * (1 + layout.geom.fibers.size());
}

}  // namespace detail

struct RunControls {
  double dt0 = 1e-3;
  double safety = 0.9;
  /// Early termination once a squared metric coefficient drops below this
  /// fraction of its initial minimum.
  double min_coefficient = 1e-4;
  double rtol = 1e-9;
  double atol = 1e-11;
  std::size_t checkpoints = 21;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double dt_min = std::numeric_limits<double>::infinity();
  double dt_max = 0.0;
  /// Sum of the step-doubling error estimates (max-norm) over accepted steps.
  double error_estimate = 0.0;
};

/// One accepted integrator state: packed values and their flow rates.
struct TrajectorySample {
  double t = 0.0;
  std::vector<double> y;
  std::vector<double> rate;
};

class Trajectory {
 public:
  Trajectory(CoupledState layout, AlphaSchedule schedule, std::vector<TrajectorySample> samples,
             std::vector<CoupledState> checkpoints, std::vector<StepStats> stats)
      : layout_(std::move(layout)),
        schedule_(schedule),
        samples_(std::move(samples)),
        checkpoints_(std::move(checkpoints)),
        stats_(std::move(stats)) {
    if (samples_.empty() || checkpoints_.empty()) throw SolverError("trajectory needs at least one state");
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      if (!(samples_[i].t > samples_[i - 1].t)) throw SolverError("trajectory sample times must increase");
    }
    for (std::size_t i = 1; i < checkpoints_.size(); ++i) {
      if (!(checkpoints_[i].t > checkpoints_[i - 1].t)) throw SolverError("checkpoint times must increase");
    }
  }

  /// A trajectory through the given states (rates recomputed), e.g. loaded
  /// checkpoints or a known static solution.
  static Trajectory from_states(std::vector<CoupledState> states, AlphaSchedule schedule) {
    if (states.empty()) throw SolverError("trajectory needs at least one state");
    std::vector<TrajectorySample> samples;
    for (const auto& s : states) {
      s.validate();
      samples.push_back({s.t, detail::pack(s), detail::pack(flow_rhs(s))});
    }
    std::vector<StepStats> stats(states.size() > 1 ? states.size() - 1 : 0);
    CoupledState layout = states.front();
    return Trajectory(std::move(layout), schedule, std::move(samples), std::move(states), std::move(stats));
  }

  const std::vector<CoupledState>& checkpoints() const { return checkpoints_; }
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  /// Stats for each interval between consecutive checkpoints.
  const std::vector<StepStats>& step_stats() const { return stats_; }
  const AlphaSchedule& schedule() const { return schedule_; }

  double t_start() const { return samples_.front().t; }
  double t_end() const { return samples_.back().t; }

  bool terminated_early() const { return terminated_early_; }
  const std::string& termination_reason() const { return termination_reason_; }
  void mark_terminated(std::string reason) {
    terminated_early_ = true;
    termination_reason_ = std::move(reason);
  }

  double accumulated_error() const {
    double e = 0.0;
    for (const auto& s : stats_) e += s.error_estimate;
    return e;
  }

  /// State at time t by cubic Hermite interpolation of the squared
  /// coefficients and map values between the bracketing integrator samples.
  CoupledState state_at(double t) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(t_end()));
    if (t < t_start() - slack || t > t_end() + slack) {
      throw DomainError("time " + std::to_string(t) + " outside trajectory span [" + std::to_string(t_start()) +
                        ", " + std::to_string(t_end()) + "]");
    }
    t = std::clamp(t, t_start(), t_end());
    if (samples_.size() == 1) return detail::unpack(samples_.front().y, layout_, t, schedule_(t));
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const TrajectorySample& s) { return v < s.t; });
    std::size_t k = static_cast<std::size_t>(std::distance(samples_.begin(), it));
    k = std::clamp<std::size_t>(k, 1, samples_.size() - 1);
    const auto& a = samples_[k - 1];
    const auto& b = samples_[k];
    const double h = b.t - a.t;
    const double s = (t - a.t) / h;
    const double h00 = (2.0 * s - 3.0) * s * s + 1.0;
    const double h10 = ((s - 2.0) * s + 1.0) * s;
    const double h01 = (3.0 - 2.0 * s) * s * s;
    const double h11 = (s - 1.0) * s * s;
    std::vector<double> y(a.y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = h00 * a.y[i] + h10 * h * a.rate[i] + h01 * b.y[i] + h11 * h * b.rate[i];
    }
    return detail::unpack(y, layout_, t, schedule_(t));
  }

  /// Sample times inside (a, b), used by solvers that follow the flow steps.
  std::vector<double> sample_times_between(double a, double b) const {
    std::vector<double> out;
    for (const auto& s : samples_) {
      if (s.t > a && s.t < b) out.push_back(s.t);
    }
    return out;
  }

 private:
  CoupledState layout_;
  AlphaSchedule schedule_;
  std::vector<TrajectorySample> samples_;
  std::vector<CoupledState> checkpoints_;
  std::vector<StepStats> stats_;
  bool terminated_early_ = false;
  std::string termination_reason_;
};

namespace detail {

inline bool coefficients_positive(const std::vector<double>& y, std::size_t metric_entries) {
  for (std::size_t i = 0; i < metric_entries; ++i) {
    if (!(y[i] > 0.0)) return false;
  }
  return true;
}

inline bool all_finite(const std::vector<double>& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

/// Classical RK4 step; returns false when a stage leaves the admissible set.
inline bool rk4_step(const std::vector<double>& y, double t, double dt, const CoupledState& layout,
                     const AlphaSchedule& schedule, std::vector<double>& out) {
  const std::size_t metric = metric_entries(layout);
  auto rate = [&](const std::vector<double>& v, double tt, std::vector<double>& k) {
    if (!all_finite(v) || !coefficients_positive(v, metric)) return false;
    k = pack(flow_rhs(unpack(v, layout, tt, schedule(tt))));
    return all_finite(k);
  };
  std::vector<double> k1, k2, k3, k4, tmp(y.size());
  if (!rate(y, t, k1)) return false;
  for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
  if (!rate(tmp, t + 0.5 * dt, k2)) return false;
  for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
  if (!rate(tmp, t + 0.5 * dt, k3)) return false;
  for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + dt * k3[i];
  if (!rate(tmp, t + dt, k4)) return false;
  out.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return all_finite(out) && coefficients_positive(out, metric);
}

/// Largest stable explicit step for the parabolic part of the system.
inline double stability_limit(const CoupledState& s) {
  const double dx = s.geom.spacing();
  double bound = DiffusionOperator(s.geom).spectral_bound();
  bound = std::max(bound, 4.0 / (s.geom.radial_sq.min() * dx * dx));
  return 2.5 / bound;
}

}  // namespace detail

/// Explicit RK4 with step-doubling error control. Checkpoints are placed on
/// a uniform grid of `controls.checkpoints` times in [initial.t, t_end].
inline Trajectory run(const CoupledState& initial, const AlphaSchedule& schedule, double t_end,
                      const RunControls& controls = {}) {
  initial.validate();
  if (!(t_end > initial.t)) throw DomainError("t_end must exceed the initial time");
  if (!(controls.dt0 > 0.0) || !(controls.safety > 0.0) || !(controls.min_coefficient > 0.0) ||
      controls.checkpoints < 2) {
    throw DomainError("run controls must be positive and request at least two checkpoints");
  }

  CoupledState layout = initial;
  layout.alpha = schedule(initial.t);

  std::vector<double> cp_times(controls.checkpoints);
  for (std::size_t k = 0; k < cp_times.size(); ++k) {
    cp_times[k] = initial.t + (t_end - initial.t) * static_cast<double>(k) / static_cast<double>(cp_times.size() - 1);
  }
  cp_times.back() = t_end;

  const std::size_t n = layout.geom.nodes();
  std::vector<double> floors(1 + layout.geom.fibers.size());
  floors[0] = controls.min_coefficient * layout.geom.radial_sq.min();
  for (std::size_t j = 0; j < layout.geom.fibers.size(); ++j) {
    floors[j + 1] = controls.min_coefficient * layout.geom.fibers[j].warp_sq.min();
  }

  std::vector<double> y = detail::pack(layout);
  double t = initial.t;
  std::vector<TrajectorySample> samples{{t, y, detail::pack(flow_rhs(layout))}};
  std::vector<CoupledState> checkpoints{layout};
  std::vector<StepStats> stats(1);
  std::size_t next_cp = 1;
  double dt = controls.dt0;
  std::string blowup;
  std::size_t total_accepted = 0;

  std::vector<double> full, half, twice;
  while (next_cp < cp_times.size()) {
    const CoupledState current = detail::unpack(y, layout, t, schedule(t));
    const double target = cp_times[next_cp];
    dt = std::min({dt, controls.safety * detail::stability_limit(current), target - t});
    const bool lands = dt >= target - t - 1e-14 * std::max(1.0, std::abs(target));
    if (lands) dt = target - t;

    const bool ok = detail::rk4_step(y, t, dt, layout, schedule, full) &&
                    detail::rk4_step(y, t, 0.5 * dt, layout, schedule, half) &&
                    detail::rk4_step(half, t + 0.5 * dt, 0.5 * dt, layout, schedule, twice);
    StepStats& st = stats.back();
    if (!ok) {
      ++st.rejected;
      dt *= 0.25;
      if (dt < 1e-15 * std::max(1.0, std::abs(t))) {
        const bool finite = detail::all_finite(y);
        if (!finite) throw IntegrationFailure("non-finite state in flow", checkpoints.back());
        blowup = "metric coefficient degenerated at t = " + std::to_string(t);
        break;
      }
      continue;
    }
    double err = 0.0;
    double err_abs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double diff = std::abs(twice[i] - full[i]) / 15.0;
      const double scale = controls.atol + controls.rtol * std::max(std::abs(y[i]), std::abs(twice[i]));
      err = std::max(err, diff / scale);
      err_abs = std::max(err_abs, diff);
    }
    if (err > 1.0) {
      ++st.rejected;
      dt *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    y = twice;
    t = lands ? target : t + dt;
    ++st.accepted;
    ++total_accepted;
    st.dt_min = std::min(st.dt_min, dt);
    st.dt_max = std::max(st.dt_max, dt);
    st.error_estimate += err_abs;
    const CoupledState accepted = detail::unpack(y, layout, t, schedule(t));
    if (!detail::all_finite(y)) throw IntegrationFailure("non-finite state in flow", checkpoints.back());
    samples.push_back({t, y, detail::pack(flow_rhs(accepted))});

    bool degenerate = false;
    for (std::size_t f = 0; f < floors.size() && !degenerate; ++f) {
      for (std::size_t i = 0; i < n; ++i) {
        if (y[f * n + i] < floors[f]) {
          degenerate = true;
          break;
        }
      }
    }
    if (lands) {
      checkpoints.push_back(accepted);
      ++next_cp;
      if (next_cp < cp_times.size()) stats.emplace_back();
    }
    if (degenerate) {
      blowup = "metric coefficient fell below " + std::to_string(controls.min_coefficient) +
               " of its initial minimum at t = " + std::to_string(t);
      if (!lands) checkpoints.push_back(accepted);
      break;
    }
    const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 4.0;
    dt *= std::clamp(grow, 0.2, 4.0);
  }

  if (!blowup.empty() && total_accepted == 0) throw BlowUpError("flow degenerates immediately: " + blowup);
  if (!blowup.empty() && checkpoints.back().t < samples.back().t) {
    checkpoints.push_back(detail::unpack(samples.back().y, layout, samples.back().t, schedule(samples.back().t)));
  }
  stats.resize(checkpoints.size() > 1 ? checkpoints.size() - 1 : 0);
  Trajectory traj(layout, schedule, std::move(samples), std::move(checkpoints), std::move(stats));
  if (!blowup.empty()) traj.mark_terminated(blowup);
  return traj;
}

}  // namespace hrf
