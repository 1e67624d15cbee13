#pragma once

// Scenario runner: integrates the flow, runs the enabled verification suites,
// writes report.json, CSV series and checkpoints.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrf/entropy.hpp"
#include "hrf/flow.hpp"
#include "hrf/heat.hpp"
#include "hrf/moser.hpp"
#include "hrf/random.hpp"
#include "hrf/spectral.hpp"
#include "hrf/harness/checkpoint.hpp"
#include "hrf/harness/config.hpp"
#include "hrf/harness/output.hpp"

namespace hrf::harness {

enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitFlowTerminated = 2,
  kExitConfigError = 3,
  kExitRuntimeError = 4,
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"spectral", "sobolev", "logsobolev", "truncation",
                                              "entropy",  "moser",   "kernel"};
  return names;
}

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::string> only_suite;  // "eigen" is an alias of "spectral"
  bool write_files = true;
  std::function<void(const std::string&)> log;
};

struct RunOutcome {
  nlohmann::ordered_json report;
  bool pass = false;
  int exit_code = kExitRuntimeError;
  std::filesystem::path out_dir;
  std::vector<std::string> files;
};

namespace detail {

using json = nlohmann::ordered_json;

struct Check {
  std::string name;
  bool pass = true;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

inline json to_json(const Check& c) {
  json j;
  j["name"] = c.name;
  j["pass"] = c.pass;
  j["value"] = c.value;
  j["limit"] = c.limit;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

struct Suite {
  explicit Suite(std::string n) : name(std::move(n)) {}

  std::string name;
  std::vector<Check> checks;
  json data = json::object();
  std::vector<std::string> notes;

  Check& check(std::string n, bool pass, double value, double limit, std::string det = {}) {
    checks.push_back({std::move(n), pass, value, limit, std::move(det)});
    return checks.back();
  }
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  json to_json() const {
    json j;
    j["pass"] = pass();
    json cs = json::array();
    for (const auto& c : checks) cs.push_back(detail::to_json(c));
    j["checks"] = cs;
    j["data"] = data;
    j["notes"] = notes;
    return j;
  }
};

struct Constants {
  InitialSobolevConstants initial;
  double lambda1_0 = 0.0;
  std::optional<SobolevPrediction> final_prediction;
  std::string error;
};

struct Context {
  const Scenario& sc;
  const Trajectory& traj;
  const RunOptions& opt;
  std::vector<std::string>& files;
  std::optional<Constants> constants;

  void log(const std::string& msg) const {
    if (opt.log) opt.log(msg);
  }
  std::filesystem::path path(const std::string& name) const {
    files.push_back(name);
    return opt.out_dir / name;
  }
  const CoupledState& initial() const { return traj.checkpoints().front(); }
  int n() const { return initial().geom.n; }
  double T() const { return traj.t_end(); }

  const Constants& get_constants() {
    if (constants) return *constants;
    Constants c;
    log("estimating Sobolev constants at t = 0");
    c.initial = estimate_sobolev_constants(initial(), sc.seed);
    const EigenResult l1 = lambda1_W(initial(), c.initial.A0, c.initial.B0);
    c.lambda1_0 = l1.lambda;
    if (l1.flagged || !(l1.lambda > 0.0)) {
      c.error = "lambda_1(0) = " + csv_number(l1.lambda) + " is not positive";
    } else {
      c.final_prediction = sobolev_constants_predict(n(), T(), c.initial.A0, c.initial.B0, c.initial.S0, c.lambda1_0,
                                                     sc.sobolev_s);
    }
    constants = c;
    return *constants;
  }
};

inline double min_S(const CoupledState& s) { return curvature(s).S.min(); }

inline bool all_constant(const std::vector<ProfileSpec>& v) {
  return std::all_of(v.begin(), v.end(), [](const ProfileSpec& p) { return p.kind == ProfileSpec::Kind::Constant; });
}

/// Round S^1 x S^{n-1} with constant map: h^2(t) = h0^2 - 2(n-2) t.
inline bool is_round_cylinder(const Scenario& sc) {
  return sc.backend == Backend::WarpedCircleSphere && sc.radial.kind == ProfileSpec::Kind::Constant &&
         all_constant(sc.warps) && all_constant(sc.phi);
}

inline bool is_flat_static(const Scenario& sc) {
  return sc.backend == Backend::DiagonalTorus && sc.radial.kind == ProfileSpec::Kind::Constant &&
         all_constant(sc.warps) && all_constant(sc.phi);
}

inline std::vector<double> checkpoint_times(const Trajectory& traj) {
  std::vector<double> t;
  for (const auto& c : traj.checkpoints()) t.push_back(c.t);
  return t;
}

inline Suite flow_suite(Context& ctx) {
  Suite s("flow");
  const auto& cps = ctx.traj.checkpoints();
  json rows = json::array();
  for (std::size_t k = 0; k < cps.size(); ++k) {
    json r;
    r["t"] = cps[k].t;
    r["alpha"] = cps[k].alpha;
    r["volume"] = volume(cps[k].geom);
    r["min_S"] = min_S(cps[k]);
    r["min_radial_sq"] = cps[k].geom.radial_sq.min();
    if (k > 0) {
      const auto& st = ctx.traj.step_stats()[k - 1];
      r["accepted"] = st.accepted;
      r["rejected"] = st.rejected;
      r["error_estimate"] = st.error_estimate;
    }
    rows.push_back(r);
  }
  s.data["checkpoints"] = rows;
  s.data["t_end"] = ctx.T();
  s.data["accumulated_error"] = ctx.traj.accumulated_error();
  s.data["terminated_early"] = ctx.traj.terminated_early();
  if (ctx.traj.terminated_early()) s.data["termination_reason"] = ctx.traj.termination_reason();
  s.check("reached_t_end", !ctx.traj.terminated_early(), ctx.T(), ctx.sc.t_end, ctx.traj.termination_reason());

  if (is_round_cylinder(ctx.sc) && !ctx.traj.terminated_early()) {
    const double h0sq = ctx.sc.warps[0].mean * ctx.sc.warps[0].mean;
    const double f0sq = ctx.sc.radial.mean * ctx.sc.radial.mean;
    double err = 0.0;
    for (const auto& c : cps) {
      const double expect = h0sq - 2.0 * (ctx.n() - 2) * c.t;
      for (std::size_t i = 0; i < c.geom.nodes(); ++i) {
        err = std::max(err, std::abs(c.geom.fibers[0].warp_sq[i] - expect));
        err = std::max(err, std::abs(c.geom.radial_sq[i] - f0sq));
      }
    }
    const double limit = 4e-6;
    s.check("closed_form_cylinder", err <= limit, err, limit, "max |h^2 - (h0^2 - 2(n-2)t)|");
  }
  if (is_flat_static(ctx.sc)) {
    double err = 0.0;
    for (const auto& c : cps) err = std::max(err, max_abs_difference(c.geom.radial_sq, cps.front().geom.radial_sq));
    s.check("static_flat", err <= 1e-12, err, 1e-12);
  }
  return s;
}

inline Suite spectral_suite(Context& ctx) {
  Suite s("spectral");
  const auto& cps = ctx.traj.checkpoints();
  std::vector<double> lambdas;
  double worst_residual = 0.0;
  bool flagged = false;
  std::optional<CsvFile> csv;
  if (ctx.opt.write_files) csv.emplace(ctx.path("spectral.csv"), std::vector<std::string>{"t", "lambda0", "residual", "iterations"});
  json rows = json::array();
  for (const auto& c : cps) {
    const EigenResult r = f_entropy_lambda0(c);
    lambdas.push_back(r.lambda);
    worst_residual = std::max(worst_residual, r.residual / (1.0 + std::abs(r.lambda)));
    flagged = flagged || r.flagged;
    rows.push_back({{"t", c.t}, {"lambda0", r.lambda}, {"residual", r.residual}, {"iterations", r.iterations}});
    if (csv) csv->row({csv_number(c.t), csv_number(r.lambda), csv_number(r.residual), std::to_string(r.iterations)});
  }
  s.data["lambda0"] = rows;
  double worst_drop = 0.0;
  for (std::size_t k = 1; k < lambdas.size(); ++k) {
    worst_drop = std::max(worst_drop, (lambdas[k - 1] - lambdas[k]) / (1.0 + std::abs(lambdas[k - 1])));
  }
  s.check("lambda0_monotone", worst_drop <= ctx.sc.spectral_tol, worst_drop, ctx.sc.spectral_tol,
          "largest relative decrease between checkpoints");
  s.check("eigen_residual", worst_residual <= 1e-8 && !flagged, worst_residual, 1e-8);

  if (is_round_cylinder(ctx.sc)) {
    const double h0sq = ctx.sc.warps[0].mean * ctx.sc.warps[0].mean;
    const int n = ctx.n();
    double rel = 0.0;
    for (std::size_t k = 0; k < cps.size(); ++k) {
      const double expect = (n - 1.0) * (n - 2.0) / (h0sq - 2.0 * (n - 2) * cps[k].t);
      rel = std::max(rel, std::abs(lambdas[k] - expect) / expect);
    }
    s.check("closed_form_lambda0", rel <= 1e-4, rel, 1e-4, "(n-1)(n-2)/h^2(t)");
  }
  if (is_flat_static(ctx.sc)) {
    double worst = 0.0;
    for (double l : lambdas) worst = std::max(worst, std::abs(l));
    s.check("flat_lambda0_zero", worst <= 1e-10, worst, 1e-10);
  }
  return s;
}

inline bool constants_ready(Context& ctx, Suite& s, bool need_prediction) {
  try {
    const Constants& c = ctx.get_constants();
    if (need_prediction && !c.final_prediction) {
      s.check("constants_available", false, c.lambda1_0, 0.0, c.error);
      return false;
    }
    return true;
  } catch (const Error& e) {
    s.check("constants_available", false, 0.0, 0.0, e.what());
    return false;
  }
}

inline Suite sobolev_suite(Context& ctx) {
  Suite s("sobolev");
  if (!constants_ready(ctx, s, true)) return s;
  const Constants& c = *ctx.constants;
  s.data["A0"] = c.initial.A0;
  s.data["B0"] = c.initial.B0;
  s.data["S0"] = c.initial.S0;
  s.data["lambda1_0"] = c.lambda1_0;
  s.data["s_param"] = ctx.sc.sobolev_s;
  json rows = json::array();
  std::size_t violations = 0;
  double worst_search = std::numeric_limits<double>::infinity();
  double worst_family = std::numeric_limits<double>::infinity();
  const auto& cps = ctx.traj.checkpoints();
  for (std::size_t k = 0; k < cps.size(); ++k) {
    const auto& st = cps[k];
    const SobolevPrediction p =
        sobolev_constants_predict(ctx.n(), st.t, c.initial.A0, c.initial.B0, c.initial.S0, c.lambda1_0, ctx.sc.sobolev_s);
    const auto family = trig_family(st.geom.nodes(), st.geom.period(), ctx.sc.sobolev_family, ctx.sc.seed + k);
    const SobolevReport rep = sobolev_check(st, p.A, p.B, family);
    const QuotientSearch q =
        minimize_sobolev_quotient(st, p.A, p.B, ctx.sc.seed + k, ctx.sc.sobolev_starts, ctx.sc.sobolev_steps);
    violations += rep.violations;
    worst_family = std::min(worst_family, rep.observed_min_quotient);
    worst_search = std::min(worst_search, q.quotient);
    rows.push_back({{"t", st.t},
                    {"A", p.A},
                    {"B", p.B},
                    {"family_min_quotient", rep.observed_min_quotient},
                    {"search_min_quotient", q.quotient},
                    {"violations", rep.violations}});
  }
  s.data["checkpoints"] = rows;
  s.check("family_violations", violations == 0, static_cast<double>(violations), 0.0);
  s.check("quotient_search", worst_search >= 1.0, worst_search, 1.0, "smallest RHS/LHS found by descent");
  s.data["family_min_quotient"] = worst_family;
  return s;
}

/// Seeded normalized Gaussian bumps plus the constant function.
inline std::vector<GridField> bump_family(const CoupledState& st, std::size_t count, std::uint64_t seed) {
  const double L = st.geom.period();
  std::vector<GridField> out;
  CounterRng rng(seed, 0xB0B);
  for (std::size_t m = 0; m < count; ++m) {
    const double c = rng.next(0.0, L);
    const double w = rng.next(0.05, 0.3) * L;
    out.push_back(GridField::sample(st.geom.nodes(), L, [&](double x) {
      double v = 0.0;
      for (int img = -2; img <= 2; ++img) {
        const double d = x - c - img * L;
        v += std::exp(-0.5 * d * d / (w * w));
      }
      return v;
    }));
  }
  out.push_back(GridField::constant(st.geom.nodes(), L, 1.0));
  return out;
}

inline Suite logsobolev_suite(Context& ctx) {
  Suite s("logsobolev");
  if (!constants_ready(ctx, s, false)) return s;
  const Constants& c = *ctx.constants;
  const auto& cps = ctx.traj.checkpoints();
  const std::vector<std::size_t> picks{0, cps.size() / 2, cps.size() - 1};
  double worst = std::numeric_limits<double>::infinity();
  json rows = json::array();
  for (std::size_t k : picks) {
    const auto& st = cps[k];
    const auto family = bump_family(st, ctx.sc.logsobolev_family, ctx.sc.seed + k);
    for (double eps : ctx.sc.logsobolev_eps) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& v : family) m = std::min(m, log_sobolev_residual(st, v, eps, c.initial.A0, c.initial.B0, st.t).residual);
      worst = std::min(worst, m);
      rows.push_back({{"t", st.t}, {"eps", eps}, {"min_residual", m}});
    }
  }
  s.data["residuals"] = rows;
  s.check("residual_nonnegative", worst >= -ctx.sc.logsobolev_tol, worst, -ctx.sc.logsobolev_tol);
  return s;
}

inline Suite truncation_suite(Context& ctx) {
  Suite s("truncation");
  if (!constants_ready(ctx, s, false)) return s;
  const Constants& c = *ctx.constants;
  auto aggregate = [&](const CoupledState& st, std::size_t& failures, double& worst_margin) {
    const double dx = st.geom.spacing();
    const auto base = trig_family(st.geom.nodes(), st.geom.period(), ctx.sc.truncation_fields, ctx.sc.seed ^ 0x7C);
    double agg = 0.0;
    for (const auto& b : base) {
      const GridField f = b.map([](double v) { return std::exp(2.0 * v); });
      const TruncationReport r = truncation_claim_check(st, f, c.initial.A0, c.initial.B0, ctx.sc.truncation_slack * dx);
      if (!r.pass) ++failures;
      worst_margin = std::max(worst_margin, (r.lhs - r.rhs) / r.rhs);
      agg += r.grad_identity_residual / r.energy_full;
    }
    return agg;
  };
  try {
    std::size_t failures = 0, fine_failures = 0;
    double margin = -std::numeric_limits<double>::infinity(), fine_margin = margin;
    const double coarse = aggregate(ctx.initial(), failures, margin);
    const double fine = aggregate(ctx.sc.initial_state(2 * ctx.sc.N), fine_failures, fine_margin);
    s.data["fields"] = ctx.sc.truncation_fields;
    s.data["largest_relative_excess"] = margin;
    s.data["identity_residual_N"] = coarse;
    s.data["identity_residual_2N"] = fine;
    s.check("claim", failures == 0, static_cast<double>(failures), 0.0, "fields exceeding the slack");
    const double ratio = fine > 0.0 ? coarse / fine : std::numeric_limits<double>::infinity();
    const bool converges = coarse < 1e-12 || ratio >= 1.5;
    s.check("identity_first_order", converges, ratio, 1.5, "residual(N) / residual(2N)");
  } catch (const PreconditionError& e) {
    s.check("precondition", false, 0.0, 0.0, e.what());
  }
  return s;
}

inline Suite entropy_suite(Context& ctx) {
  Suite s("entropy");
  EntropySeriesOptions o;
  o.points = ctx.sc.entropy_points;
  o.bump_width = ctx.sc.entropy_bump_width;
  const EntropySeries es = w_series(ctx.traj, ctx.sc.entropy_epsilon, ctx.sc.entropy_time(), o);
  s.notes = es.warnings;
  s.data["epsilon"] = es.epsilon;
  s.data["t0"] = es.t0;
  std::optional<CsvFile> csv;
  if (ctx.opt.write_files) {
    csv.emplace(ctx.path("entropy.csv"),
                std::vector<std::string>{"t", "tau", "W", "dW_fd", "dW_rhs", "lambda0", "mass"});
  }
  double fd_excess = 0.0, mass_err = 0.0, lambda_drop = 0.0;
  for (std::size_t k = 0; k < es.records.size(); ++k) {
    const auto& r = es.records[k];
    if (csv) {
      csv->row({csv_number(r.t), csv_number(r.tau), csv_number(r.W), csv_number(r.dW_fd), csv_number(r.dW_rhs),
                csv_number(r.lambda0), csv_number(r.mass)});
    }
    if (r.interior) {
      const double allowed = std::max(ctx.sc.entropy_tol_abs, ctx.sc.entropy_tol_rel * std::abs(r.dW_rhs));
      fd_excess = std::max(fd_excess, std::abs(r.dW_fd - r.dW_rhs) / allowed);
    }
    mass_err = std::max(mass_err, std::abs(r.mass - 1.0));
    if (k > 0) {
      const auto& p = es.records[k - 1];
      lambda_drop = std::max(lambda_drop, (p.lambda0 - r.lambda0) / (1.0 + std::abs(p.lambda0)));
    }
  }
  const double step = es.records.size() > 1 ? min_consecutive_difference(es.records) : 0.0;
  s.data["W_first"] = es.records.front().W;
  s.data["W_last"] = es.records.back().W;
  s.check("W_monotone", step >= -ctx.sc.entropy_tol_monotone, step, -ctx.sc.entropy_tol_monotone,
          "smallest W(t_k+1) - W(t_k)");
  s.check("dW_agreement", fd_excess <= 1.0, fd_excess, 1.0, "max |dW_fd - dW_rhs| / allowed");
  s.check("mass_conserved", mass_err <= ctx.sc.mass_tol, mass_err, ctx.sc.mass_tol);
  s.check("lambda0_monotone", lambda_drop <= ctx.sc.spectral_tol, lambda_drop, ctx.sc.spectral_tol);
  return s;
}

inline std::string p_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

inline Suite moser_suite(Context& ctx) {
  Suite s("moser");
  if (!constants_ready(ctx, s, true)) return s;
  const Constants& c = *ctx.constants;
  const auto& start = ctx.initial();
  const double S0 = std::max(0.0, -min_S(start));
  CounterRng rng(ctx.sc.seed, 0x3053);
  const double center = rng.next(0.0, start.geom.period());
  GridField u0 = mollifier(start, static_cast<std::size_t>(center / start.geom.spacing()) % start.geom.nodes(),
                           0.1 * start.geom.period());
  const FieldSeries f = heat_forward(ctx.traj, u0, ctx.traj.t_start(), ctx.T(), checkpoint_times(ctx.traj));
  s.data["S0"] = S0;
  s.data["A"] = c.final_prediction->A;
  s.data["B"] = c.final_prediction->B;
  json per_p = json::array();
  for (double p : ctx.sc.moser_p) {
    const MoserConstants mc = moser_constants(ctx.n(), p, c.final_prediction->A, c.final_prediction->B);
    const SupBoundReport rep = sup_bound_check(ctx.traj, f, ctx.sc.moser_a, p, mc, S0);
    if (ctx.opt.write_files) {
      CsvFile csv(ctx.path("moser_p" + p_label(p) + ".csv"), {"t", "sup_f", "bound", "ratio", "pass"});
      for (const auto& e : rep.entries) {
        csv.row({csv_number(e.t), csv_number(e.sup_f), csv_number(e.bound), csv_number(e.ratio), e.pass ? "1" : "0"});
      }
    }
    per_p.push_back({{"p", p}, {"exponent", rep.exponent}, {"max_ratio", rep.max_ratio}, {"C0", mc.C0}});
    s.check("sup_bound_p" + p_label(p), rep.pass, rep.max_ratio, 1.0, "max sup f / bound");
  }
  s.data["exponents"] = per_p;
  const double p0 = 2.0;
  const double chi = (ctx.n() + 2.0) / ctx.n();
  double series = 0.0;
  for (double pk = p0; 1.0 / pk > 1e-18; pk *= chi) series += 1.0 / pk;
  const double sum_err = std::abs(series - inverse_exponent_sum(ctx.n(), p0)) / series;
  s.check("exponent_sum_identity", sum_err <= 1e-12, sum_err, 1e-12);
  return s;
}

inline Suite kernel_suite(Context& ctx) {
  Suite s("kernel");
  if (!constants_ready(ctx, s, true)) return s;
  const Constants& c = *ctx.constants;
  const CoupledState at = ctx.traj.state_at(ctx.sc.kernel_s);
  const double width = ctx.sc.kernel_width_cells * at.geom.spacing();
  const HeatKernelEstimate k =
      ctx.sc.kernel_richardson ? heat_kernel_extrapolated(ctx.traj, ctx.sc.kernel_source, ctx.sc.kernel_s, width)
                               : heat_kernel(ctx.traj, ctx.sc.kernel_source, ctx.sc.kernel_s, width);
  const double S0 = std::max(0.0, -min_S(at));
  const MoserConstants mc = moser_constants(ctx.n(), 1.0, c.final_prediction->A, c.final_prediction->B);
  const KernelBoundReport rep = kernel_bound_check(k, ctx.traj, mc, S0);
  if (ctx.opt.write_files) {
    CsvFile csv(ctx.path("kernel.csv"), {"t", "node", "x", "G", "mass"});
    for (std::size_t j = 0; j < k.series.size(); ++j) {
      const GridField& g = k.series.fields[j];
      for (std::size_t i = 0; i < g.size(); ++i) {
        csv.row({csv_number(k.series.times[j]), std::to_string(i), csv_number(g.x(i)), csv_number(g[i]),
                 csv_number(k.series.masses[j])});
      }
    }
  }
  s.data["source"] = k.source;
  s.data["s"] = k.s;
  s.data["width"] = k.width;
  s.data["extrapolated"] = k.extrapolated;
  s.data["S0"] = S0;
  s.data["constant"] = rep.constant;
  s.data["excluded_times"] = rep.excluded_times;
  double worst_scaled = 0.0, worst_mass = 0.0;
  bool bound_ok = true, mass_ok = true;
  std::size_t checked = 0;
  for (const auto& e : rep.entries) {
    if (e.bound_checked) {
      ++checked;
      worst_scaled = std::max(worst_scaled, e.scaled / rep.constant);
    }
    const double limit = S0 == 0.0 ? 1.0 : std::exp(S0 * e.elapsed);
    worst_mass = std::max(worst_mass, e.mass - limit);
    bound_ok = bound_ok && e.bound_pass;
    mass_ok = mass_ok && e.mass_pass;
  }
  if (S0 == 0.0) {
    double rise = 0.0;
    for (std::size_t j = 1; j < rep.entries.size(); ++j) {
      rise = std::max(rise, rep.entries[j].mass - rep.entries[j - 1].mass);
    }
    s.check("mass_nonincreasing", rise <= 1e-10, rise, 1e-10);
  }
  s.data["checked_times"] = checked;
  s.check("on_diagonal_bound", bound_ok && checked > 0, worst_scaled, 1.0, "max sup G (t-s)^{n/2} / C");
  s.check("mass_law", mass_ok, worst_mass, 1e-6, "max mass - allowed");
  if (checked == 0) s.notes.push_back("no output time satisfies t - s >= 10 sigma^2");
  return s;
}

inline void write_report(const RunOptions& opt, const json& report) {
  std::ofstream out(opt.out_dir / "report.json");
  if (!out) throw ConfigError("cannot write " + (opt.out_dir / "report.json").string());
  out << report.dump(2) << '\n';
}

inline json scenario_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["description"] = sc.description;
  j["seed"] = sc.seed;
  json cfg = json::object();
  for (const auto& [k, v] : sc.resolved) cfg[k] = v.value;
  j["config"] = cfg;
  return j;
}

}  // namespace detail

inline bool suite_enabled(const Scenario& sc, const RunOptions& opt, const std::string& name) {
  if (opt.only_suite) return *opt.only_suite == name || (*opt.only_suite == "eigen" && name == "spectral");
  const auto& v = sc.verify;
  if (name == "spectral") return v.spectral;
  if (name == "sobolev") return v.sobolev;
  if (name == "logsobolev") return v.logsobolev;
  if (name == "truncation") return v.truncation;
  if (name == "entropy") return v.entropy;
  if (name == "moser") return v.moser;
  if (name == "kernel") return v.kernel;
  return false;
}

inline void validate_suite_name(const std::string& name) {
  if (name == "eigen") return;
  const auto& all = suite_names();
  if (std::find(all.begin(), all.end(), name) == all.end()) throw ConfigError("unknown suite '" + name + "'");
}

/// Runs the scenario. Never throws for failures inside the flow or a suite;
/// those are recorded in the report and reflected in the exit code.
inline RunOutcome run_scenario(const Scenario& sc, const RunOptions& opt) {
  using detail::json;
  if (opt.only_suite) validate_suite_name(*opt.only_suite);
  RunOutcome out;
  out.out_dir = opt.out_dir;
  if (opt.write_files) std::filesystem::create_directories(opt.out_dir);

  json report;
  report["scenario"] = detail::scenario_json(sc);
  auto finish = [&](int code) {
    out.exit_code = code;
    out.pass = code == kExitPass;
    report["pass"] = out.pass;
    report["exit_status"] = code;
    report["files"] = out.files;
    out.report = report;
    if (opt.write_files) detail::write_report(opt, report);
    return out;
  };

  auto log = [&](const std::string& m) {
    if (opt.log) opt.log(m);
  };

  std::optional<Trajectory> traj;
  try {
    log("integrating flow to t = " + csv_number(sc.t_end));
    traj.emplace(run(sc.initial_state(), sc.schedule(), sc.t_end, sc.controls));
  } catch (const BlowUpError& e) {
    report["flow"] = {{"pass", false}, {"error", e.what()}};
    return finish(kExitFlowTerminated);
  } catch (const IntegrationFailure& e) {
    report["flow"] = {{"pass", false}, {"error", e.what()}};
    return finish(kExitRuntimeError);
  } catch (const Error& e) {
    report["flow"] = {{"pass", false}, {"error", e.what()}};
    return finish(kExitConfigError);
  }

  if (opt.write_files) {
    std::filesystem::create_directories(opt.out_dir / "checkpoints");
    const auto& cps = traj->checkpoints();
    for (std::size_t k = 0; k < cps.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoints/checkpoint_%03zu.json", k);
      out.files.push_back(name);
      write_checkpoint(opt.out_dir / name, cps[k]);
    }
  }

  detail::Context ctx{sc, *traj, opt, out.files, std::nullopt};
  const detail::Suite flow = detail::flow_suite(ctx);
  report["flow"] = flow.to_json();
  if (traj->terminated_early()) {
    report["suites"] = json::object();
    report["notes"] = json::array({"verification skipped: flow terminated early"});
    return finish(kExitFlowTerminated);
  }

  bool all_pass = flow.pass();
  json suites = json::object();
  for (const auto& name : suite_names()) {
    if (!suite_enabled(sc, opt, name)) continue;
    log("suite " + name);
    detail::Suite s(name);
    try {
      if (name == "spectral") s = detail::spectral_suite(ctx);
      if (name == "sobolev") s = detail::sobolev_suite(ctx);
      if (name == "logsobolev") s = detail::logsobolev_suite(ctx);
      if (name == "truncation") s = detail::truncation_suite(ctx);
      if (name == "entropy") s = detail::entropy_suite(ctx);
      if (name == "moser") s = detail::moser_suite(ctx);
      if (name == "kernel") s = detail::kernel_suite(ctx);
    } catch (const Error& e) {
      s.check("completed", false, 0.0, 0.0, e.what());
    }
    log("suite " + name + (s.pass() ? ": pass" : ": FAIL"));
    all_pass = all_pass && s.pass();
    suites[name] = s.to_json();
  }
  report["suites"] = suites;
  if (ctx.constants) {
    const auto& c = *ctx.constants;
    json cj;
    cj["A0"] = c.initial.A0;
    cj["B0"] = c.initial.B0;
    cj["S0"] = c.initial.S0;
    cj["A_min"] = c.initial.A_min;
    cj["lambda1_0"] = c.lambda1_0;
    if (c.final_prediction) {
      cj["A_T"] = c.final_prediction->A;
      cj["B_T"] = c.final_prediction->B;
    }
    if (!c.error.empty()) cj["error"] = c.error;
    report["constants"] = cj;
  }
  return finish(all_pass ? kExitPass : kExitCheckFailed);
}

}  // namespace hrf::harness
