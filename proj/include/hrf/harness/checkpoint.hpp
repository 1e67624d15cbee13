#pragma once

// Checkpoint files: one JSON object per state.
//   {backend, n, N, L, t, alpha, fiber_volumes, coefficients: {radial_sq, warp_sq}, phi}

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrf/errors.hpp"
#include "hrf/geometry.hpp"

namespace hrf::harness {

inline nlohmann::ordered_json checkpoint_json(const CoupledState& s) {
  auto arr = [](const GridField& f) { return std::vector<double>(f.values().begin(), f.values().end()); };
  nlohmann::ordered_json j;
  j["backend"] = std::string(to_string(s.geom.backend));
  j["n"] = s.geom.n;
  j["N"] = s.geom.nodes();
  j["L"] = s.geom.period();
  j["t"] = s.t;
  j["alpha"] = s.alpha;
  std::vector<double> volumes;
  std::vector<std::vector<double>> warps;
  for (const auto& f : s.geom.fibers) {
    volumes.push_back(f.volume);
    warps.push_back(arr(f.warp_sq));
  }
  j["fiber_volumes"] = volumes;
  j["coefficients"] = {{"radial_sq", arr(s.geom.radial_sq)}, {"warp_sq", warps}};
  std::vector<std::vector<double>> phi;
  for (const auto& c : s.phi) phi.push_back(arr(c));
  j["phi"] = phi;
  return j;
}

inline CoupledState checkpoint_from_json(const nlohmann::json& j) {
  try {
    CoupledState s;
    ReducedGeometry& g = s.geom;
    g.backend = parse_backend(j.at("backend").get<std::string>());
    g.n = j.at("n").get<int>();
    const auto N = j.at("N").get<std::size_t>();
    const double L = j.at("L").get<double>();
    auto field = [&](const nlohmann::json& a) {
      auto v = a.get<std::vector<double>>();
      if (v.size() != N) throw ConfigError("checkpoint array has " + std::to_string(v.size()) + " entries, expected N");
      return GridField(std::move(v), L);
    };
    g.radial_sq = field(j.at("coefficients").at("radial_sq"));
    const auto& warps = j.at("coefficients").at("warp_sq");
    const auto volumes = j.at("fiber_volumes").get<std::vector<double>>();
    if (warps.size() != volumes.size()) throw ConfigError("checkpoint fiber arrays disagree in length");
    for (std::size_t k = 0; k < warps.size(); ++k) {
      FiberFamily f;
      if (g.backend == Backend::WarpedCircleSphere) {
        f.dim = g.n - 1;
        f.curvature = 1.0;
      }
      f.volume = volumes[k];
      f.warp_sq = field(warps[k]);
      g.fibers.push_back(std::move(f));
    }
    for (const auto& c : j.at("phi")) s.phi.push_back(field(c));
    s.t = j.at("t").get<double>();
    s.alpha = j.at("alpha").get<double>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void write_checkpoint(const std::filesystem::path& path, const CoupledState& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << checkpoint_json(s).dump(1) << '\n';
}

inline CoupledState read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace hrf::harness
