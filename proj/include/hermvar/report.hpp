#pragma once

// CSV reports and JSON metadata sidecars for harness runs.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <system_error>

#include <json.hpp>

#include "hermvar/harness.hpp"
#include "hermvar/version.hpp"

namespace hermvar {

inline constexpr const char* kReportHeader =
    "kind,alpha,beta,q,N,M,reps,ks,mean,var,exact_ev2,rate_bound,seconds";

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "HERMVAR_OUTPUT_DIR";

/// Shortest decimal that round-trips; integral values keep a trailing ".0".
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline void write_report_csv(std::ostream& os, const ExperimentConfig& cfg,
                             std::span<const ReportRow> rows) {
  os << kReportHeader << '\n';
  for (const ReportRow& r : rows) {
    os << to_string(cfg.kind) << ',' << format_double(cfg.alpha.value()) << ','
       << format_double(cfg.beta.value()) << ',' << cfg.q.value() << ',' << r.n << ',' << r.m << ','
       << r.replications << ',' << format_double(r.ks_distance) << ','
       << format_double(r.sample_mean) << ',' << format_double(r.sample_variance) << ','
       << format_double(r.exact_expected_square) << ',' << format_double(r.rate_bound) << ','
       << format_double(r.wall_time_seconds) << '\n';
  }
}

inline std::string report_stem(const ExperimentConfig& cfg) {
  return std::string(to_string(cfg.kind)) + "_" + format_double(cfg.alpha.value()) + "_" +
         format_double(cfg.beta.value()) + "_q" + std::to_string(cfg.q.value()) + "_" +
         std::to_string(cfg.master_seed);
}

inline std::string report_file_name(const ExperimentConfig& cfg) { return report_stem(cfg) + ".csv"; }

inline std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return std::filesystem::current_path();
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json grids = nlohmann::ordered_json::array();
  for (const auto& g : cfg.grid_sizes) grids.push_back({{"N", g.n}, {"M", g.m}});
  return {{"kind", to_string(cfg.kind)},
          {"alpha", cfg.alpha.value()},
          {"beta", cfg.beta.value()},
          {"q", cfg.q.value()},
          {"grids", grids},
          {"replications", cfg.replications},
          {"master_seed", cfg.master_seed},
          {"threads", cfg.threads}};
}

/// Metadata for a report: config, seed, version, git hash and wall time.
inline nlohmann::ordered_json sidecar_json(const ExperimentConfig& cfg, double wall_seconds) {
  return {{"config", config_to_json(cfg)},
          {"seed", cfg.master_seed},
          {"version", kVersion},
          {"git_hash", kGitHash},
          {"wall_seconds", wall_seconds},
          {"csv", report_file_name(cfg)}};
}

}  // namespace hermvar
