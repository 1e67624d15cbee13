#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "hrf/errors.hpp"

namespace hrf::harness {

inline constexpr const char* kOutputEnv = "HRF_OUTPUT_DIR";

/// --out, then $HRF_OUTPUT_DIR, then ./hrf-output/<scenario>.
inline std::filesystem::path resolve_output_dir(const std::optional<std::string>& cli, const std::string& scenario) {
  if (cli && !cli->empty()) return *cli;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return std::filesystem::path("hrf-output") / scenario;
}

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace hrf::harness
