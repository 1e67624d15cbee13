// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "hrf/hrf.hpp"
#include "oracles/spectral_sum.hpp"

using namespace hrf;
using namespace hrf::harness;
using Json = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kAll{"flat-torus-static", "shrinking-cylinder", "bumpy-cylinder", "list-flow-sine",
                                    "cylinder-negative-s"};
const std::vector<std::string> kNonnegative{"flat-torus-static", "shrinking-cylinder", "bumpy-cylinder"};

struct Line {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, const Line& l) {
  std::printf("%s criterion %2d: %s%s%s\n", l.pass ? "PASS" : "FAIL", id, title.c_str(), l.detail.empty() ? "" : " | ",
              l.detail.c_str());
  std::fflush(stdout);
  if (!l.pass) ++failures;
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

const Json* find_check(const Json& rep, const std::string& suite, const std::string& name) {
  if (!rep.contains("suites") || !rep["suites"].contains(suite)) return nullptr;
  for (const auto& c : rep["suites"][suite]["checks"]) {
    if (c["name"] == name) return &c;
  }
  return nullptr;
}

/// Requires every check of `suite` to pass and names the failures.
void require_suite(Line& l, const std::map<std::string, Json>& reports, const std::vector<std::string>& presets,
                   const std::string& suite) {
  for (const auto& p : presets) {
    const Json& rep = reports.at(p);
    if (!rep.contains("suites") || !rep["suites"].contains(suite)) {
      l.require(false, p + ": suite " + suite + " missing");
      continue;
    }
    for (const auto& c : rep["suites"][suite]["checks"]) {
      const std::string what = p + ": " + c["name"].get<std::string>() + " = " +
                               (c["value"].is_number() ? num(c["value"].get<double>()) : std::string("?"));
      l.require(c["pass"].get<bool>(), what);
    }
  }
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();

  std::map<std::string, Json> reports;
  std::map<std::string, Scenario> scenarios;
  for (const auto& p : kAll) {
    Scenario sc = load_scenario(p);
    RunOptions opt;
    opt.write_files = false;
    reports[p] = run_scenario(sc, opt).report;
    scenarios.emplace(p, std::move(sc));
  }

  {
    Line l;
    ConfigMap keys = parse_config_text("preset = shrinking-cylinder\n", "acceptance");
    apply_overrides(keys, {"geometry.warp=const 2", "run.t_end=1", "run.checkpoints=11", "geometry.N=128"});
    const Scenario sc = make_scenario(keys);
    const Trajectory traj = run(sc.initial_state(), sc.schedule(), sc.t_end, sc.controls);
    double err = 0.0;
    for (const auto& c : traj.checkpoints()) {
      for (std::size_t i = 0; i < c.geom.nodes(); ++i) {
        err = std::max(err, std::abs(c.geom.fibers[0].warp_sq[i] - (4.0 - 2.0 * c.t)));
        err = std::max(err, std::abs(c.geom.radial_sq[i] - 1.0));
      }
    }
    l.require(!traj.terminated_early(), "flow terminated early");
    l.require(err <= 4e-6, "max error " + num(err));
    if (l.pass) l.detail = "max |h^2 - (4 - 2t)| = " + num(err);
    report(1, "shrinking cylinder h0 = 2 to t = 1 matches h^2 = h0^2 - 2t", l);
  }

  {
    Line l;
    double worst = 0.0;
    for (const std::string p : {"shrinking-cylinder", "list-flow-sine"}) {
      const Scenario& sc = scenarios.at(p);
      const Trajectory traj = run(sc.initial_state(), sc.schedule(), sc.t_end, sc.controls);
      const CoupledState end = traj.state_at(traj.t_end());
      const GridField bump = mollifier(end, sc.N / 3, 0.5);
      const FieldSeries sol = conjugate_backward(traj, bump, traj.t_end(), traj.t_start());
      for (double m : sol.masses) worst = std::max(worst, std::abs(m - 1.0));
      l.require(sol.size() == traj.checkpoints().size(), p + ": missing output times");
    }
    l.require(worst <= 1e-6, "mass drift " + num(worst));
    if (l.pass) l.detail = "max |mass - 1| = " + num(worst);
    report(2, "conjugate heat mass conserved on shrinking-cylinder and list-flow-sine", l);
  }

  {
    Line l;
    require_suite(l, reports, kAll, "entropy");
    report(3, "W monotone on all presets, dW_fd within 2% of dW_rhs, mass conserved", l);
  }

  {
    Line l;
    require_suite(l, reports, kAll, "spectral");
    const Json* cf = find_check(reports.at("shrinking-cylinder"), "spectral", "closed_form_lambda0");
    l.require(cf != nullptr, "closed-form check missing");
    if (l.pass && cf) l.detail = "closed-form relative error " + num((*cf)["value"].get<double>());
    report(4, "lambda_0 monotone on all presets, closed form on the shrinking cylinder", l);
  }

  {
    Line l;
    require_suite(l, reports, kAll, "sobolev");
    double worst = INFINITY;
    for (const auto& p : kAll) {
      if (const Json* c = find_check(reports.at(p), "sobolev", "quotient_search")) {
        worst = std::min(worst, (*c)["value"].get<double>());
      }
    }
    if (l.pass) l.detail = "smallest searched quotient " + num(worst);
    report(5, "Sobolev inequality with predicted A(t), B(t) at every checkpoint", l);
  }

  {
    Line l;
    require_suite(l, reports, kAll, "logsobolev");
    report(6, "log-Sobolev residuals >= -1e-8 for eps in {0.05, 0.1, 0.2, 0.5, 1}", l);
  }

  {
    Line l;
    require_suite(l, reports, kAll, "truncation");
    report(7, "truncation claim on 100 fields, gradient identity converges at O(dx)", l);
  }

  {
    Line l;
    require_suite(l, reports, kNonnegative, "moser");
    report(8, "Moser sup bound for p in {1/2, 1, 2, 4} on S >= 0 presets, exponent sums", l);
  }

  {
    Line l;
    std::vector<std::string> presets = kNonnegative;
    presets.push_back("cylinder-negative-s");
    require_suite(l, reports, presets, "kernel");
    for (const auto& p : presets) {
      const Json& d = reports.at(p)["suites"]["kernel"]["data"];
      l.require(d.contains("checked_times") && d["checked_times"].get<int>() > 0, p + ": no time checked");
    }
    report(9, "heat-kernel on-diagonal bound and mass law, S >= 0 presets and negative S", l);
  }

  {
    Line l;
    const std::size_t N = 128;
    const Scenario sc = load_scenario("flat-torus-static");
    const Trajectory traj = run(sc.initial_state(N), sc.schedule(), 1.0, sc.controls);
    const double L = sc.L;
    const double dx = L / N;
    const double sigma = 4.0 * dx;
    const double vol = volume(traj.checkpoints().front().geom);
    const std::size_t y = 40;
    const std::vector<double> times{0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    const HeatKernelEstimate k = heat_kernel(traj, y, 0.0, sigma, 1.0, times);
    double worst = 0.0;
    for (std::size_t j = 1; j < k.series.size(); ++j) {
      for (std::size_t i = 0; i < N; ++i) {
        const double ref = oracle::flat_kernel(i * dx, y * dx, k.series.times[j], L, vol, sigma);
        worst = std::max(worst, std::abs(k.series.fields[j][i] - ref));
      }
    }
    l.require(worst <= 1e-4, "max error " + num(worst));
    if (l.pass) l.detail = "max |G - G_oracle| = " + num(worst);
    report(10, "flat-torus heat kernel matches the spectral sum for t in [0.01, 1]", l);
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of 10 criteria failed, %.1f s\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
