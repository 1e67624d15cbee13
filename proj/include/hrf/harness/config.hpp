#pragma once

// Scenario configuration: flat "key = value" text with dotted keys.
//
//   # comment
//   preset = shrinking-cylinder      (optional base, applied first)
//   geometry.N = 128
//   geometry.warp = const 2
//
// Profiles: "const c", "sin mean amp k", "cos mean amp k", evaluated as
// mean + amp sin(2 pi k x / L). Numbers may carry a "pi" suffix (2pi, 0.5pi).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hrf/errors.hpp"
#include "hrf/flow.hpp"
#include "hrf/geometry.hpp"
#include "hrf/schedule.hpp"

namespace hrf::harness {

struct ConfigValue {
  std::string value;
  std::string origin;  // "file:line" or "preset:name"
};

using ConfigMap = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace detail

inline ConfigMap parse_config_text(std::string_view text, const std::string& source) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string line(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    if (out.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    out[key] = {value, where};
  }
  return out;
}

// ---------------------------------------------------------------------------

struct ProfileSpec {
  enum class Kind { Constant, Sine, Cosine };
  Kind kind = Kind::Constant;
  double mean = 1.0;
  double amp = 0.0;
  double k = 1.0;

  Profile bind(double period) const {
    const double w = 2.0 * std::numbers::pi * k / period;
    switch (kind) {
      case Kind::Constant:
        return [m = mean](double) { return m; };
      case Kind::Sine:
        return [m = mean, a = amp, w](double x) { return m + a * std::sin(w * x); };
      case Kind::Cosine:
        return [m = mean, a = amp, w](double x) { return m + a * std::cos(w * x); };
    }
    return [](double) { return 0.0; };
  }

  std::string str() const;
};

inline double parse_number(const std::string& raw, const std::string& where) {
  std::string s = raw;
  double scale = 1.0;
  if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
    scale = std::numbers::pi;
    s.resize(s.size() - 2);
    if (s.empty()) return scale;
  }
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(where + ": '" + raw + "' is not a number");
  }
  return v * scale;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string ProfileSpec::str() const {
  switch (kind) {
    case Kind::Constant:
      return "const " + format_number(mean);
    case Kind::Sine:
      return "sin " + format_number(mean) + " " + format_number(amp) + " " + format_number(k);
    case Kind::Cosine:
      return "cos " + format_number(mean) + " " + format_number(amp) + " " + format_number(k);
  }
  return {};
}

inline ProfileSpec parse_profile(const std::string& text, const std::string& where) {
  const auto w = detail::split_words(text);
  ProfileSpec p;
  if (w.size() == 2 && w[0] == "const") {
    p.mean = parse_number(w[1], where);
    return p;
  }
  if (w.size() == 4 && (w[0] == "sin" || w[0] == "cos")) {
    p.kind = w[0] == "sin" ? ProfileSpec::Kind::Sine : ProfileSpec::Kind::Cosine;
    p.mean = parse_number(w[1], where);
    p.amp = parse_number(w[2], where);
    p.k = parse_number(w[3], where);
    if (p.k != std::round(p.k)) throw ConfigError(where + ": profile wavenumber must be an integer");
    return p;
  }
  throw ConfigError(where + ": profile must be 'const c', 'sin mean amp k' or 'cos mean amp k', got '" + text + "'");
}

// ---------------------------------------------------------------------------

struct Scenario {
  std::string name = "custom";
  std::string description;
  std::uint64_t seed = 1;

  Backend backend = Backend::WarpedCircleSphere;
  int n = 3;
  std::size_t N = 128;
  double L = 2.0 * std::numbers::pi;
  double Ly = 2.0 * std::numbers::pi;
  double Lz = 2.0 * std::numbers::pi;
  ProfileSpec radial;
  std::vector<ProfileSpec> warps{ProfileSpec{}};
  std::vector<ProfileSpec> phi;

  AlphaSchedule::Kind alpha_kind = AlphaSchedule::Kind::Constant;
  double alpha0 = 1.0;
  double alpha_rate = 0.0;
  double alpha_floor = 1e-3;

  double t_end = 1.0;
  RunControls controls;

  struct Toggles {
    bool spectral = true;
    bool entropy = true;
    bool kernel = true;
    bool moser = true;
    bool sobolev = true;
    bool logsobolev = true;
    bool truncation = true;
  } verify;

  double spectral_tol = 1e-6;

  double entropy_epsilon = 0.3;
  double entropy_t0 = -1.0;  // negative: t_end
  std::size_t entropy_points = 41;
  double entropy_bump_width = 0.5;
  double entropy_tol_monotone = 1e-6;
  double entropy_tol_rel = 0.02;
  double entropy_tol_abs = 1e-4;
  double mass_tol = 1e-6;

  std::size_t kernel_source = 0;
  double kernel_s = 0.0;
  double kernel_width_cells = 4.0;
  bool kernel_richardson = false;

  std::vector<double> moser_p{0.5, 1.0, 2.0, 4.0};
  double moser_a = 0.0;

  std::size_t sobolev_family = 20;
  double sobolev_s = 1.0;
  std::size_t sobolev_starts = 4;
  std::size_t sobolev_steps = 500;

  std::size_t logsobolev_family = 10;
  std::vector<double> logsobolev_eps{0.05, 0.1, 0.2, 0.5, 1.0};
  double logsobolev_tol = 1e-8;

  std::size_t truncation_fields = 100;
  double truncation_slack = 50.0;  // multiples of dx

  /// Resolved key/value pairs, in key order, for the report.
  ConfigMap resolved;

  CoupledState initial_state() const {
    GeometryInit init;
    init.radial = radial.bind(L);
    for (const auto& w : warps) init.warps.push_back(w.bind(L));
    init.period_y = Ly;
    init.period_z = Lz;
    CoupledState s;
    s.geom = build_geometry(backend, n, N, L, init);
    for (const auto& p : phi) s.phi.push_back(GridField::sample(N, L, p.bind(L)));
    s.alpha = schedule()(0.0);
    s.validate();
    return s;
  }

  /// Same scenario sampled on a different node count.
  CoupledState initial_state(std::size_t nodes) const {
    Scenario copy = *this;
    copy.N = nodes;
    return copy.initial_state();
  }

  AlphaSchedule schedule() const { return AlphaSchedule::make(alpha_kind, alpha0, alpha_rate, alpha_floor); }

  double entropy_time() const { return entropy_t0 < 0.0 ? t_end : entropy_t0; }
};

struct PresetInfo {
  std::string name;
  std::string description;
  std::string text;
};

inline const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> list{
      {"flat-torus-static", "flat T^3 with constant map; the flow is static and S = 0",
       "geometry.backend = diagonal-torus\n"
       "geometry.radial = const 1\n"
       "geometry.warp_y = const 1\n"
       "geometry.warp_z = const 1\n"
       "run.t_end = 1\n"
       "run.checkpoints = 11\n"},
      {"shrinking-cylinder", "round S^1 x S^2 with h0 = 1 and constant map; h^2 = 1 - 2t",
       "geometry.backend = warped-circle-sphere\n"
       "geometry.n = 3\n"
       "geometry.radial = const 1\n"
       "geometry.warp = const 1\n"
       "run.t_end = 0.4\n"
       "run.checkpoints = 21\n"},
      {"bumpy-cylinder", "S^1 x S^2 with warping 1 + 0.2 sin x; S > 0",
       "geometry.backend = warped-circle-sphere\n"
       "geometry.n = 3\n"
       "geometry.radial = const 1\n"
       "geometry.warp = sin 1 0.2 1\n"
       "kernel.width_cells = 2\n"
       "run.t_end = 0.2\n"
       "run.checkpoints = 11\n"},
      {"list-flow-sine", "extended Ricci flow on flat T^3 with phi = 0.5 sin x into R; S <= 0",
       "geometry.backend = diagonal-torus\n"
       "geometry.radial = const 1\n"
       "geometry.warp_y = const 1\n"
       "geometry.warp_z = const 1\n"
       "phi.c0 = sin 0 0.5 1\n"
       "alpha.kind = constant\n"
       "alpha.alpha0 = 1\n"
       "run.t_end = 0.5\n"
       "run.checkpoints = 11\n"},
      {"cylinder-negative-s", "round S^1 x S^2 with phi = 1.8 sin x and decaying alpha; S dips below 0",
       "geometry.backend = warped-circle-sphere\n"
       "geometry.n = 3\n"
       "geometry.radial = const 1\n"
       "geometry.warp = const 1\n"
       "phi.c0 = sin 0 1.8 1\n"
       "alpha.kind = exponential-decay\n"
       "alpha.alpha0 = 1\n"
       "alpha.rate = 1\n"
       "alpha.floor = 0.2\n"
       "kernel.width_cells = 2\n"
       "run.t_end = 0.3\n"
       "run.checkpoints = 11\n"},
  };
  return list;
}

inline const PresetInfo& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

namespace detail {

inline bool parse_bool(const ConfigValue& v, const std::string& key) {
  const std::string& s = v.value;
  if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "off" || s == "0" || s == "no") return false;
  throw ConfigError(v.origin + ": '" + key + "' expects a boolean, got '" + s + "'");
}

inline std::size_t parse_count(const ConfigValue& v, const std::string& key, std::size_t lo) {
  const double d = parse_number(v.value, v.origin);
  if (d != std::floor(d) || d < static_cast<double>(lo) || d > 1e9) {
    throw ConfigError(v.origin + ": '" + key + "' expects an integer >= " + std::to_string(lo));
  }
  return static_cast<std::size_t>(d);
}

inline std::vector<double> parse_list(const ConfigValue& v) {
  std::vector<double> out;
  for (const auto& w : split_words(v.value)) out.push_back(parse_number(w, v.origin));
  if (out.empty()) throw ConfigError(v.origin + ": empty list");
  return out;
}

}  // namespace detail

/// Builds a scenario from parsed keys. A `preset` key pulls in that preset's
/// keys first; explicit keys override them. Unknown keys are rejected.
inline Scenario make_scenario(const ConfigMap& user) {
  ConfigMap keys;
  std::string preset_name;
  if (auto it = user.find("preset"); it != user.end()) {
    preset_name = it->second.value;
    const PresetInfo& p = find_preset(preset_name);
    keys = parse_config_text(p.text, "preset:" + p.name);
    keys["name"] = {p.name, "preset:" + p.name};
    keys["description"] = {p.description, "preset:" + p.name};
  }
  for (const auto& [k, v] : user) {
    if (k != "preset") keys[k] = v;
  }

  Scenario s;
  s.controls.checkpoints = 21;
  auto num = [&](const std::string& k, double& out, double lo, double hi) {
    const auto& v = keys.at(k);
    out = parse_number(v.value, v.origin);
    if (!(out >= lo && out <= hi)) {
      throw ConfigError(v.origin + ": '" + k + "' = " + v.value + " outside [" + format_number(lo) + ", " +
                        format_number(hi) + "]");
    }
  };
  auto positive = [&](const std::string& k, double& out) {
    num(k, out, 0.0, 1e12);
    if (!(out > 0.0)) throw ConfigError(keys.at(k).origin + ": '" + k + "' must be positive");
  };

  // backend first: it decides which warp keys exist
  if (keys.count("geometry.backend")) {
    try {
      s.backend = parse_backend(keys.at("geometry.backend").value);
    } catch (const ConfigError& e) {
      throw ConfigError(keys.at("geometry.backend").origin + ": " + e.what());
    }
  }
  const bool torus = s.backend == Backend::DiagonalTorus;
  if (torus) s.warps.assign(2, ProfileSpec{});

  std::map<std::size_t, ProfileSpec> phi_components;
  for (const auto& [k, v] : keys) {
    const std::string& where = v.origin;
    if (k == "name") {
      s.name = v.value;
    } else if (k == "description") {
      s.description = v.value;
    } else if (k == "seed") {
      s.seed = detail::parse_count(v, k, 0);
    } else if (k == "geometry.backend") {
    } else if (k == "geometry.n") {
      s.n = static_cast<int>(detail::parse_count(v, k, 3));
      if (s.n > 16) throw ConfigError(where + ": geometry.n must be <= 16");
    } else if (k == "geometry.N") {
      s.N = detail::parse_count(v, k, kMinNodes);
      if (s.N > 8192) throw ConfigError(where + ": geometry.N must be <= 8192");
    } else if (k == "geometry.L") {
      positive(k, s.L);
    } else if (k == "geometry.Ly" || k == "geometry.Lz") {
      if (!torus) throw ConfigError(where + ": '" + k + "' only applies to the diagonal-torus backend");
      positive(k, k == "geometry.Ly" ? s.Ly : s.Lz);
    } else if (k == "geometry.radial") {
      s.radial = parse_profile(v.value, where);
    } else if (k == "geometry.warp") {
      if (torus) throw ConfigError(where + ": use geometry.warp_y / geometry.warp_z for the torus");
      s.warps[0] = parse_profile(v.value, where);
    } else if (k == "geometry.warp_y" || k == "geometry.warp_z") {
      if (!torus) throw ConfigError(where + ": '" + k + "' only applies to the diagonal-torus backend");
      s.warps[k == "geometry.warp_y" ? 0 : 1] = parse_profile(v.value, where);
    } else if (k.rfind("phi.c", 0) == 0) {
      const std::string idx = k.substr(5);
      if (idx.empty() || idx.size() > 1 || idx[0] < '0' || idx[0] > '7') {
        throw ConfigError(where + ": map components are phi.c0 ... phi.c7");
      }
      phi_components[static_cast<std::size_t>(idx[0] - '0')] = parse_profile(v.value, where);
    } else if (k == "alpha.kind") {
      try {
        s.alpha_kind = parse_alpha_kind(v.value);
      } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
      }
    } else if (k == "alpha.alpha0") {
      positive(k, s.alpha0);
    } else if (k == "alpha.rate") {
      num(k, s.alpha_rate, 0.0, 1e6);
    } else if (k == "alpha.floor") {
      positive(k, s.alpha_floor);
    } else if (k == "run.t_end") {
      positive(k, s.t_end);
    } else if (k == "run.dt0") {
      positive(k, s.controls.dt0);
    } else if (k == "run.checkpoints") {
      s.controls.checkpoints = detail::parse_count(v, k, 3);
    } else if (k == "run.safety") {
      num(k, s.controls.safety, 1e-3, 1.0);
    } else if (k == "run.min_coefficient") {
      num(k, s.controls.min_coefficient, 1e-12, 0.5);
    } else if (k == "run.rtol") {
      num(k, s.controls.rtol, 1e-14, 1e-2);
    } else if (k == "run.atol") {
      num(k, s.controls.atol, 1e-16, 1e-2);
    } else if (k.rfind("verify.", 0) == 0) {
      const std::string suite = k.substr(7);
      bool* slot = suite == "spectral"     ? &s.verify.spectral
                   : suite == "entropy"    ? &s.verify.entropy
                   : suite == "kernel"     ? &s.verify.kernel
                   : suite == "moser"      ? &s.verify.moser
                   : suite == "sobolev"    ? &s.verify.sobolev
                   : suite == "logsobolev" ? &s.verify.logsobolev
                   : suite == "truncation" ? &s.verify.truncation
                                           : nullptr;
      if (!slot) throw ConfigError(where + ": unknown verification suite '" + suite + "'");
      *slot = detail::parse_bool(v, k);
    } else if (k == "spectral.tol_monotone") {
      num(k, s.spectral_tol, 0.0, 1.0);
    } else if (k == "entropy.epsilon") {
      positive(k, s.entropy_epsilon);
    } else if (k == "entropy.t0") {
      positive(k, s.entropy_t0);
    } else if (k == "entropy.points") {
      s.entropy_points = detail::parse_count(v, k, 3);
    } else if (k == "entropy.bump_width") {
      positive(k, s.entropy_bump_width);
    } else if (k == "entropy.tol_monotone") {
      num(k, s.entropy_tol_monotone, 0.0, 1.0);
    } else if (k == "entropy.tol_rel") {
      num(k, s.entropy_tol_rel, 0.0, 1.0);
    } else if (k == "entropy.tol_abs") {
      num(k, s.entropy_tol_abs, 0.0, 1.0);
    } else if (k == "entropy.tol_mass") {
      num(k, s.mass_tol, 0.0, 1.0);
    } else if (k == "kernel.source") {
      s.kernel_source = detail::parse_count(v, k, 0);
    } else if (k == "kernel.s") {
      num(k, s.kernel_s, 0.0, 1e12);
    } else if (k == "kernel.width_cells") {
      num(k, s.kernel_width_cells, 2.0, 1e6);
    } else if (k == "kernel.richardson") {
      s.kernel_richardson = detail::parse_bool(v, k);
    } else if (k == "moser.p") {
      s.moser_p = detail::parse_list(v);
      for (double p : s.moser_p) {
        if (!(p > 0.0)) throw ConfigError(where + ": moser.p entries must be positive");
      }
    } else if (k == "moser.a") {
      num(k, s.moser_a, 0.0, 1e6);
    } else if (k == "sobolev.family") {
      s.sobolev_family = detail::parse_count(v, k, 1);
    } else if (k == "sobolev.s_param") {
      num(k, s.sobolev_s, 1e-6, 2.0 - 1e-6);
    } else if (k == "sobolev.search_starts") {
      s.sobolev_starts = detail::parse_count(v, k, 0);
    } else if (k == "sobolev.search_steps") {
      s.sobolev_steps = detail::parse_count(v, k, 1);
    } else if (k == "logsobolev.family") {
      s.logsobolev_family = detail::parse_count(v, k, 1);
    } else if (k == "logsobolev.eps") {
      s.logsobolev_eps = detail::parse_list(v);
      for (double e : s.logsobolev_eps) {
        if (!(e > 0.0)) throw ConfigError(where + ": logsobolev.eps entries must be positive");
      }
    } else if (k == "logsobolev.tol") {
      num(k, s.logsobolev_tol, 0.0, 1.0);
    } else if (k == "truncation.fields") {
      s.truncation_fields = detail::parse_count(v, k, 1);
    } else if (k == "truncation.slack") {
      num(k, s.truncation_slack, 0.0, 1e6);
    } else {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  }

  for (std::size_t i = 0; i < phi_components.size(); ++i) {
    if (!phi_components.count(i)) throw ConfigError("map components must be numbered from phi.c0 without gaps");
    s.phi.push_back(phi_components.at(i));
  }
  if (torus && s.n != 3) throw ConfigError("diagonal-torus backend requires geometry.n = 3");
  if (s.alpha_floor > s.alpha0) s.alpha_floor = s.alpha0;
  if (s.kernel_source >= s.N) throw ConfigError("kernel.source must be a node index below geometry.N");
  if (s.entropy_t0 > s.t_end) throw ConfigError("entropy.t0 must not exceed run.t_end");
  if (s.kernel_s >= s.t_end) throw ConfigError("kernel.s must lie before run.t_end");
  if (!preset_name.empty()) keys["preset"] = {preset_name, "config"};
  s.resolved = keys;
  return s;
}

inline Scenario load_scenario_text(std::string_view text, const std::string& source) {
  return make_scenario(parse_config_text(text, source));
}

/// Keys from a config file, or {preset = name} when the argument names a preset.
inline ConfigMap load_config_map(const std::string& path_or_preset) {
  std::ifstream in(path_or_preset);
  if (!in) {
    for (const auto& p : presets()) {
      if (p.name == path_or_preset) return parse_config_text("preset = " + p.name + "\n", "preset:" + p.name);
    }
    throw ConfigError("cannot open config '" + path_or_preset + "' (and it is not a preset name)");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path_or_preset);
}

/// Applies "key=value" overrides on top of a parsed map.
inline void apply_overrides(ConfigMap& keys, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    const std::string k = detail::trim(std::string_view(o).substr(0, eq));
    const std::string v = detail::trim(std::string_view(o).substr(eq + 1));
    if (k.empty() || v.empty()) throw ConfigError("override '" + o + "' is not key=value");
    keys[k] = {v, "--set " + k};
  }
}

inline Scenario load_scenario(const std::string& path_or_preset, const std::vector<std::string>& overrides = {}) {
  ConfigMap keys = load_config_map(path_or_preset);
  apply_overrides(keys, overrides);
  return make_scenario(keys);
}

}  // namespace hrf::harness
