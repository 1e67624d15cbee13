#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrf/hrf.hpp"

namespace {

using namespace hrf::harness;

struct Common {
  std::string config;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config, "config file or preset name")->required();
  cmd->add_option("-o,--out", c.out, std::string("output directory (overrides $") + kOutputEnv + ")");
  cmd->add_option("-s,--set", c.overrides, "override a config key, key=value (repeatable)");
  cmd->add_flag("-q,--quiet", c.quiet, "no progress lines on stderr");
}

void print_summary(const RunOutcome& r) {
  const auto& rep = r.report;
  if (rep.contains("flow") && rep["flow"].contains("checks")) {
    for (const auto& c : rep["flow"]["checks"]) {
      std::printf("  flow/%-28s %s\n", c["name"].get<std::string>().c_str(), c["pass"].get<bool>() ? "pass" : "FAIL");
    }
  } else if (rep.contains("flow") && rep["flow"].contains("error")) {
    std::printf("  flow: %s\n", rep["flow"]["error"].get<std::string>().c_str());
  }
  if (rep.contains("suites")) {
    for (const auto& [name, s] : rep["suites"].items()) {
      for (const auto& c : s["checks"]) {
        const std::string label = name + "/" + c["name"].get<std::string>();
        std::printf("  %-33s %s\n", label.c_str(), c["pass"].get<bool>() ? "pass" : "FAIL");
      }
    }
  }
  std::printf("%s (exit %d), output in %s\n", r.pass ? "PASS" : "FAIL", r.exit_code, r.out_dir.string().c_str());
}

int execute(const Common& c, std::optional<std::string> suite, bool summary = true) {
  const Scenario sc = load_scenario(c.config, c.overrides);
  RunOptions opt;
  opt.out_dir = resolve_output_dir(c.out, sc.name);
  opt.only_suite = std::move(suite);
  if (!c.quiet) opt.log = [](const std::string& m) { std::fprintf(stderr, "[hrf] %s\n", m.c_str()); };
  const RunOutcome r = run_scenario(sc, opt);
  if (summary) print_summary(r);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hrf: harmonic-Ricci flow verification lab"};
  app.require_subcommand(1);

  auto* presets_cmd = app.add_subcommand("presets", "list built-in scenarios");

  Common run_args;
  auto* run_cmd = app.add_subcommand("run", "run a scenario with every enabled suite");
  add_common(run_cmd, run_args);

  Common verify_args;
  std::string suite;
  auto* verify_cmd = app.add_subcommand("verify", "run a single verification suite");
  verify_cmd->add_option("suite", suite, "spectral|eigen|sobolev|logsobolev|truncation|entropy|moser|kernel")->required();
  add_common(verify_cmd, verify_args);

  Common eigen_args;
  auto* eigen_cmd = app.add_subcommand("eigen", "lambda_0 at every checkpoint");
  add_common(eigen_cmd, eigen_args);

  Common kernel_args;
  auto* kernel_cmd = app.add_subcommand("kernel", "heat-kernel estimate and on-diagonal bound");
  add_common(kernel_cmd, kernel_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*presets_cmd) {
      for (const auto& p : presets()) std::printf("%-22s %s\n", p.name.c_str(), p.description.c_str());
      return kExitPass;
    }
    if (*run_cmd) return execute(run_args, std::nullopt);
    if (*verify_cmd) {
      validate_suite_name(suite);
      return execute(verify_args, suite);
    }
    if (*eigen_cmd) {
      const Scenario sc = load_scenario(eigen_args.config, eigen_args.overrides);
      RunOptions opt;
      opt.out_dir = resolve_output_dir(eigen_args.out, sc.name);
      opt.only_suite = "spectral";
      const RunOutcome r = run_scenario(sc, opt);
      if (r.report.contains("suites") && r.report["suites"].contains("spectral")) {
        std::printf("%-24s %-24s %s\n", "t", "lambda0", "residual");
        for (const auto& row : r.report["suites"]["spectral"]["data"]["lambda0"]) {
          std::printf("%-24.17g %-24.17g %.3e\n", row["t"].get<double>(), row["lambda0"].get<double>(),
                      row["residual"].get<double>());
        }
      }
      print_summary(r);
      return r.exit_code;
    }
    if (*kernel_cmd) return execute(kernel_args, std::string("kernel"));
  } catch (const hrf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntimeError;
  }
  return kExitPass;
}
