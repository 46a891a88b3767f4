#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hermvar/errors.hpp"
#include "hermvar/exact_moments.hpp"
#include "hermvar/harness.hpp"
#include "hermvar/normalization.hpp"
#include "hermvar/report.hpp"
#include "hermvar/simulator.hpp"
#include "hermvar/variations.hpp"
#include "hermvar/version.hpp"

namespace hermvar::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::array<const char*, 7> kSubcommands = {
    "simulate", "variations", "constants", "verify-clt", "verify-noncentral", "covariance",
    "estimate-hurst"};

// Malformed flag values detected after CLI11 parsing; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) parts.push_back(cur);
  return parts;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw UsageError("invalid " + what + ": '" + s + "'");
  }
  if (pos != s.size() || v == 0 || s.front() == '-') throw UsageError("invalid " + what + ": '" + s + "'");
  return static_cast<std::size_t>(v);
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError("invalid " + what + ": '" + s + "'");
  }
  if (pos != s.size()) throw UsageError("invalid " + what + ": '" + s + "'");
  return v;
}

// "32,64" -> square grids; "32x64" -> N=32, M=64.
std::vector<GridSize> parse_grids(const std::string& s) {
  std::vector<GridSize> out;
  for (const std::string& tok : split(s, ',')) {
    const auto x = tok.find('x');
    if (x == std::string::npos) {
      const std::size_t n = parse_size(tok, "grid size");
      out.push_back({n, n});
    } else {
      out.push_back({parse_size(tok.substr(0, x), "grid size"),
                     parse_size(tok.substr(x + 1), "grid size")});
    }
  }
  if (out.empty()) throw UsageError("--grids needs at least one grid size");
  return out;
}

std::pair<Point, Point> parse_pair(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 4) throw UsageError("--pair expects s1,t1,s2,t2; got '" + s + "'");
  std::array<double, 4> v{};
  for (std::size_t k = 0; k < 4; ++k) v[k] = parse_double(parts[k], "--pair coordinate");
  return {Point{v[0], v[1]}, Point{v[2], v[3]}};
}

std::string json_scalar(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_float()) return format_double(j.get<double>());
  return j.dump();
}

// Expands a JSON config object into flag tokens, skipping flags already on the command line.
std::vector<std::string> config_tokens(const std::string& path, const std::set<std::string>& given) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> toks;
  for (const auto& [key, val] : j.items()) {
    const std::string flag = "--" + key;
    if (given.count(flag) != 0) continue;
    if (val.is_boolean()) {
      if (val.get<bool>()) toks.push_back(flag);
    } else if (val.is_array()) {
      const bool nested = !val.empty() && val.front().is_array();
      if (nested) {
        for (const auto& inner : val) {
          std::string joined;
          for (const auto& e : inner) joined += (joined.empty() ? "" : ",") + json_scalar(e);
          toks.push_back(flag);
          toks.push_back(joined);
        }
      } else {
        std::string joined;
        for (const auto& e : val) joined += (joined.empty() ? "" : ",") + json_scalar(e);
        toks.push_back(flag);
        toks.push_back(joined);
      }
    } else {
      toks.push_back(flag);
      toks.push_back(json_scalar(val));
    }
  }
  return toks;
}

// Pulls --config out of args and splices the file's flags in right after the subcommand.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw UsageError("--config requires a path");
      path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
    }
  }
  if (!path) return rest;
  std::set<std::string> given;
  for (const auto& a : rest)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  const auto sub = std::find_if(rest.begin(), rest.end(), [](const std::string& a) {
    return std::find_if(kSubcommands.begin(), kSubcommands.end(),
                        [&](const char* s) { return a == s; }) != kSubcommands.end();
  });
  const auto toks = config_tokens(*path, given);
  const auto at = sub == rest.end() ? rest.end() : sub + 1;
  rest.insert(at, toks.begin(), toks.end());
  return rest;
}

fs::path resolve_out(const std::string& flag_value, const std::string& default_name) {
  if (!flag_value.empty()) return flag_value;
  return default_output_dir() / default_name;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write to '" + path.string() + "' failed");
}

struct Common {
  unsigned threads = default_thread_count();
  bool timing = false;
};

struct ModelFlags {
  double alpha = 0.5;
  double beta = 0.5;
  int q = 2;
  std::uint64_t seed = 0;
};

void add_model_flags(CLI::App* sub, ModelFlags& f, bool with_q) {
  sub->add_option("--alpha", f.alpha, "Hurst index of the first axis, in (0,1)");
  sub->add_option("--beta", f.beta, "Hurst index of the second axis, in (0,1)");
  if (with_q) sub->add_option("--q", f.q, "Hermite rank q (integer >= 1)");
  sub->add_option("--seed", f.seed, "master seed (unsigned 64-bit)");
}

ExperimentConfig make_config(const ModelFlags& f, const Common& c, ExperimentKind kind,
                             std::vector<GridSize> grids, std::size_t reps) {
  ExperimentConfig cfg;
  cfg.alpha = HurstExponent(f.alpha);
  cfg.beta = HurstExponent(f.beta);
  cfg.q = ChaosOrder(f.q);
  cfg.grid_sizes = std::move(grids);
  cfg.replications = reps;
  cfg.master_seed = f.seed;
  cfg.kind = kind;
  cfg.threads = c.threads;
  cfg.record_timing = c.timing;
  return cfg;
}

void emit_report(const ExperimentConfig& cfg, const std::vector<ReportRow>& rows,
                 const std::string& out_flag, double wall, std::ostream& out) {
  std::ostringstream csv;
  write_report_csv(csv, cfg, rows);
  const fs::path path = resolve_out(out_flag, report_file_name(cfg));
  write_file_atomic(path, csv.str());
  fs::path side = path;
  side.replace_extension(".json");
  write_file_atomic(side, sidecar_json(cfg, wall).dump(2) + "\n");
  out << "wrote " << path.string() << '\n';
}

double elapsed_since(detail::Clock::time_point t0) { return detail::seconds_since(t0); }

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hermite variations of fractional Brownian sheets", "hermvar-cli"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string("hermvar ") + kVersion + " (" + kGitHash + ")",
                       "print library version and build hash");
  Common common;
  app.add_option("--threads", common.threads, "worker threads for replications (count)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--timing", common.timing,
               "write wall time in the CSV seconds column (otherwise 0; always in the JSON sidecar)");
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON object whose keys mirror the flags (e.g. {\"alpha\": 0.3}); flags override it");

  // simulate
  ModelFlags sim;
  std::size_t sim_n = 16;
  std::size_t sim_m = 16;
  std::uint64_t sim_stream = 0;
  std::string sim_out;
  bool sim_dense = false;
  auto* s_sim = app.add_subcommand("simulate", "sample one normalised increment field to a binary file");
  add_model_flags(s_sim, sim, false);
  s_sim->add_option("--n", sim_n, "cells along the alpha axis (count)")->check(CLI::PositiveNumber);
  s_sim->add_option("--m", sim_m, "cells along the beta axis (count)")->check(CLI::PositiveNumber);
  s_sim->add_option("--stream", sim_stream, "stream index within the master seed");
  s_sim->add_option("--out", sim_out, "output path (default: $HERMVAR_OUTPUT_DIR or cwd)");
  s_sim->add_flag("--dense", sim_dense, "use the dense Cholesky sampler instead of circulant embedding");

  // variations
  ModelFlags var;
  std::size_t var_n = 64;
  std::size_t var_m = 64;
  std::string var_in;
  auto* s_var = app.add_subcommand("variations", "Hermite variation V and normalised V~ of one field");
  add_model_flags(s_var, var, true);
  s_var->add_option("--n", var_n, "cells along the alpha axis (count)")->check(CLI::PositiveNumber);
  s_var->add_option("--m", var_m, "cells along the beta axis (count)")->check(CLI::PositiveNumber);
  s_var->add_option("--in", var_in, "read the field from a binary file instead of sampling");

  // constants
  std::string c_kind = "s";
  double c_gamma = 0.5;
  int c_q = 2;
  double c_tol = 1e-12;
  auto* s_const = app.add_subcommand("constants", "limit constants s_gamma, iota, kappa");
  s_const->add_option("--kind", c_kind, "constant: s | iota | kappa")
      ->check(CLI::IsMember({"s", "iota", "kappa"}));
  s_const->add_option("--gamma", c_gamma, "Hurst index (ignored for iota)");
  s_const->add_option("--q", c_q, "Hermite rank q (integer >= 1)");
  s_const->add_option("--tol", c_tol, "absolute error tolerance for s_gamma");

  // verify-clt / verify-noncentral
  ModelFlags clt;
  std::string clt_grids = "32,64,128";
  std::size_t clt_reps = 500;
  std::string clt_out;
  auto* s_clt = app.add_subcommand("verify-clt", "Monte Carlo Kolmogorov distance of V~ to N(0,1)");
  add_model_flags(s_clt, clt, true);
  s_clt->add_option("--grids", clt_grids, "grid sizes: N (square) or NxM, comma separated");
  s_clt->add_option("--reps", clt_reps, "replications per grid (count)")->check(CLI::PositiveNumber);
  s_clt->add_option("--out", clt_out, "CSV path (default: $HERMVAR_OUTPUT_DIR/<kind>_<alpha>_<beta>_q<q>_<seed>.csv)");

  ModelFlags nc{0.9, 0.9, 2, 0};
  std::string nc_grids = "64,128";
  std::size_t nc_reps = 1000;
  std::string nc_out;
  auto* s_nc = app.add_subcommand("verify-noncentral",
                                  "nested-grid study of V~ in the Hermite-sheet regime");
  add_model_flags(s_nc, nc, true);
  s_nc->add_option("--grids", nc_grids, "ascending dyadically nested grid sizes, comma separated");
  s_nc->add_option("--reps", nc_reps, "replications (count)")->check(CLI::PositiveNumber);
  s_nc->add_option("--out", nc_out, "CSV path (default: $HERMVAR_OUTPUT_DIR/<kind>_<alpha>_<beta>_q<q>_<seed>.csv)");

  // covariance
  ModelFlags cov{0.9, 0.9, 2, 0};
  std::size_t cov_n = 128;
  std::size_t cov_m = 128;
  std::size_t cov_reps = 1000;
  std::vector<std::string> cov_pairs;
  auto* s_cov = app.add_subcommand("covariance", "partial-sum covariance vs the Hermite sheet");
  add_model_flags(s_cov, cov, true);
  s_cov->add_option("--n", cov_n, "cells along the alpha axis (count)")->check(CLI::PositiveNumber);
  s_cov->add_option("--m", cov_m, "cells along the beta axis (count)")->check(CLI::PositiveNumber);
  s_cov->add_option("--reps", cov_reps, "replications (count)")->check(CLI::PositiveNumber);
  s_cov->add_option("--pair", cov_pairs, "point pair s1,t1,s2,t2 in [0,1]; repeatable (default: five standard pairs)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  // estimate-hurst
  ModelFlags hur;
  std::size_t hur_n = 1024;
  std::size_t hur_m = 1024;
  std::size_t hur_reps = 1;
  int hur_scales = 3;
  std::string hur_in;
  auto* s_hur = app.add_subcommand("estimate-hurst", "log-regression Hurst estimates from sheet samples");
  add_model_flags(s_hur, hur, false);
  s_hur->add_option("--n", hur_n, "cells along the alpha axis (count)")->check(CLI::PositiveNumber);
  s_hur->add_option("--m", hur_m, "cells along the beta axis (count)")->check(CLI::PositiveNumber);
  s_hur->add_option("--reps", hur_reps, "independent sheets (count)")->check(CLI::PositiveNumber);
  s_hur->add_option("--scales", hur_scales, "dyadic scales per axis (>= 3)");
  s_hur->add_option("--in", hur_in, "estimate from a binary field file instead of sampling");

  for (CLI::App* sub : app.get_subcommands({})) sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help / --version
      if (dynamic_cast<const CLI::CallForVersion*>(&e) != nullptr)
        out << e.what() << '\n';
      else
        app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (s_sim->parsed()) {
      const HurstExponent a(sim.alpha);
      const HurstExponent b(sim.beta);
      const FieldSampler sampler(a, b, sim_n, sim_m, sim_dense);
      const IncrementField field = sampler.sample({sim.seed, sim_stream});
      std::ostringstream bytes;
      write_field(bytes, field);
      const std::string name = "field_" + format_double(sim.alpha) + "_" + format_double(sim.beta) +
                               "_" + std::to_string(sim_n) + "x" + std::to_string(sim_m) + "_" +
                               std::to_string(sim.seed) + ".bin";
      const fs::path path = resolve_out(sim_out, name);
      write_file_atomic(path, bytes.str());
      out << "wrote " << path.string() << '\n';
    } else if (s_var->parsed()) {
      IncrementField field;
      if (!var_in.empty()) {
        std::ifstream is(var_in, std::ios::binary);
        if (!is) throw std::runtime_error("cannot read field file '" + var_in + "'");
        field = read_field(is);
      } else {
        field = sample_increment_field(HurstExponent(var.alpha), HurstExponent(var.beta), var_n,
                                       var_m, {var.seed, 0});
      }
      const VariationReport rep = normalized_variation(field, ChaosOrder(var.q));
      out << "N,M,q,case,axes_swapped,V,tildeV,phi\n";
      out << rep.n << ',' << rep.m << ',' << rep.q << ','
          << (rep.regime ? std::to_string(rep.regime->case_id) : std::string("-")) << ','
          << (rep.regime && rep.regime->axes_swapped ? 1 : 0) << ',' << format_double(rep.V) << ','
          << format_double(rep.tildeV) << ',' << format_double(rep.phi_used) << '\n';
    } else if (s_const->parsed()) {
      const ChaosOrder q(c_q);
      LimitConstant c;
      if (c_kind == "s") c = s_gamma(HurstExponent(c_gamma), q, c_tol);
      else if (c_kind == "iota") c = iota(q);
      else c = kappa(HurstExponent(c_gamma), q);
      out << to_string(c.kind) << ',' << format_double(c.value) << ','
          << format_double(c.abs_error_bound) << '\n';
    } else if (s_clt->parsed()) {
      const auto t0 = detail::Clock::now();
      const ExperimentConfig cfg =
          make_config(clt, common, ExperimentKind::clt, parse_grids(clt_grids), clt_reps);
      const auto rows = run_clt_experiment(cfg);
      emit_report(cfg, rows, clt_out, elapsed_since(t0), out);
    } else if (s_nc->parsed()) {
      const auto t0 = detail::Clock::now();
      const ExperimentConfig cfg =
          make_config(nc, common, ExperimentKind::noncentral, parse_grids(nc_grids), nc_reps);
      const NoncentralReport rep = run_noncentral_study(cfg);
      emit_report(cfg, rep.rows, nc_out, elapsed_since(t0), out);
      out << "N,M,norm_sq,qfact_norm_sq\n";
      for (const auto& l : rep.levels)
        out << l.grid.n << ',' << l.grid.m << ',' << format_double(l.norm_squared) << ','
            << format_double(l.expected_square) << '\n';
      out << "N,M,N2,M2,exact_cov,mc_cov,mc_se,exact_corr,mc_corr,distance_sq\n";
      for (const auto& c : rep.cross)
        out << c.coarse.n << ',' << c.coarse.m << ',' << c.fine.n << ',' << c.fine.m << ','
            << format_double(c.exact_covariance) << ',' << format_double(c.mc_covariance) << ','
            << format_double(c.mc_standard_error) << ',' << format_double(c.exact_correlation)
            << ',' << format_double(c.mc_correlation) << ',' << format_double(c.distance_squared)
            << '\n';
    } else if (s_cov->parsed()) {
      std::vector<std::pair<Point, Point>> pairs;
      for (const auto& p : cov_pairs) pairs.push_back(parse_pair(p));
      if (pairs.empty())
        pairs = {{{1, 1}, {1, 1}},
                 {{0.5, 0.5}, {0.5, 0.5}},
                 {{1, 1}, {0.5, 0.5}},
                 {{0.25, 0.75}, {0.75, 0.25}},
                 {{0.75, 0.75}, {0.75, 0.75}}};
      const ExperimentConfig cfg =
          make_config(cov, common, ExperimentKind::noncentral, {{cov_n, cov_m}}, cov_reps);
      const CovarianceReport rep = covariance_check(cfg, pairs);
      out << "s1,t1,s2,t2,mc_cov,mc_se,limit_cov,exact_cov\n";
      for (const auto& e : rep.entries)
        out << format_double(e.p1.s) << ',' << format_double(e.p1.t) << ',' << format_double(e.p2.s)
            << ',' << format_double(e.p2.t) << ',' << format_double(e.mc_covariance) << ','
            << format_double(e.mc_standard_error) << ',' << format_double(e.limit_covariance) << ','
            << format_double(e.exact_covariance) << '\n';
      out << "max_abs_deviation," << format_double(rep.max_abs_deviation) << ",se,"
          << format_double(rep.standard_error_at_max) << '\n';
    } else if (s_hur->parsed()) {
      out << "rep,alpha_hat,beta_hat\n";
      if (!hur_in.empty()) {
        std::ifstream is(hur_in, std::ios::binary);
        if (!is) throw std::runtime_error("cannot read field file '" + hur_in + "'");
        const HurstEstimate est = estimate_hurst(reconstruct_sheet(read_field(is)), hur_scales);
        out << 0 << ',' << format_double(est.alpha_hat) << ',' << format_double(est.beta_hat) << '\n';
      } else {
        const ExperimentConfig cfg =
            make_config(hur, common, ExperimentKind::hurst, {{hur_n, hur_m}}, hur_reps);
        const auto ests = run_hurst_experiment(cfg, hur_scales);
        for (std::size_t r = 0; r < ests.size(); ++r)
          out << r << ',' << format_double(ests[r].alpha_hat) << ','
              << format_double(ests[r].beta_hat) << '\n';
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hermvar::cli
