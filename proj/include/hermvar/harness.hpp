#pragma once

// Experiment orchestration: Monte Carlo verification of the central limit
// regimes, the non-central (Hermite sheet) regime and its covariance, rate
// fits on exact quantities, and Hurst index estimation.
//
// Replication r always uses stream SeedSpec{master_seed, r}; results are stored
// by replication index and reduced in a fixed order, so every report is
// bit-identical for any thread count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hermvar/errors.hpp"
#include "hermvar/exact_moments.hpp"
#include "hermvar/kernels.hpp"
#include "hermvar/normalization.hpp"
#include "hermvar/parallel.hpp"
#include "hermvar/simulator.hpp"
#include "hermvar/summation.hpp"
#include "hermvar/variations.hpp"

namespace hermvar {

enum class ExperimentKind { clt, noncentral, rate, hurst };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::clt: return "clt";
    case ExperimentKind::noncentral: return "noncentral";
    case ExperimentKind::rate: return "rate";
    case ExperimentKind::hurst: return "hurst";
  }
  return "?";
}

struct GridSize {
  std::size_t n = 1;
  std::size_t m = 1;
  friend bool operator==(const GridSize&, const GridSize&) = default;
};

struct ExperimentConfig {
  HurstExponent alpha{0.5};
  HurstExponent beta{0.5};
  ChaosOrder q{2};
  std::vector<GridSize> grid_sizes;
  std::size_t replications = 1;
  std::uint64_t master_seed = 0;
  ExperimentKind kind = ExperimentKind::clt;
  unsigned threads = default_thread_count();
  bool record_timing = false;  // wall time stays 0 unless requested (keeps reports reproducible)
};

struct ReportRow {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t replications = 0;
  double ks_distance = 0.0;
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  double exact_expected_square = 0.0;
  double rate_bound = std::numeric_limits<double>::quiet_NaN();
  double wall_time_seconds = 0.0;
};

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Kolmogorov distance between the empirical law of `samples` and N(0,1),
/// evaluated on both sides of every jump.
inline double ks_distance(std::span<const double> samples) {
  detail::require(!samples.empty(), "ks_distance requires a nonempty sample");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = standard_normal_cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

/// Least-squares slope of log y against log x.
inline double fit_rate_exponent(std::span<const std::pair<double, double>> points) {
  detail::require(points.size() >= 3, "fit_rate_exponent requires at least 3 points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [x, y] : points) {
    detail::require(x > 0.0 && y > 0.0, "fit_rate_exponent requires positive x and y");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double mx = pairwise_mean(lx);
  const double my = pairwise_mean(ly);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  detail::require(sxx > 0.0, "fit_rate_exponent requires distinct x values");
  return sxy / sxx;
}

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline SampleMoments sample_moments(std::span<const double> xs) {
  SampleMoments out;
  out.mean = pairwise_mean(xs);
  if (xs.size() < 2) return out;
  std::vector<double> sq(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) sq[k] = (xs[k] - out.mean) * (xs[k] - out.mean);
  out.variance = pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
  return out;
}

/// Mean of x_r y_r (zero-mean variables) and its standard error.
struct ProductMoment {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline ProductMoment product_moment(std::span<const double> xs, std::span<const double> ys) {
  detail::require(xs.size() == ys.size() && xs.size() >= 2, "product_moment needs paired samples");
  std::vector<double> prod(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) prod[k] = xs[k] * ys[k];
  const SampleMoments mom = sample_moments(prod);
  return {mom.mean, std::sqrt(mom.variance / static_cast<double>(prod.size()))};
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline void validate_config(const ExperimentConfig& cfg) {
  require(cfg.replications >= 1, "replications must be >= 1");
  require(!cfg.grid_sizes.empty(), "grid_sizes must be nonempty");
  for (const auto& g : cfg.grid_sizes) require(g.n >= 1 && g.m >= 1, "grid sizes must be >= 1");
}

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace detail

/// V~ for `replications` independent fields on one grid.
inline std::vector<double> simulate_normalized_variations(const ExperimentConfig& cfg, GridSize grid) {
  const FieldSampler sampler(cfg.alpha, cfg.beta, grid.n, grid.m);
  std::vector<double> out(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    const IncrementField field = sampler.sample({cfg.master_seed, r});
    out[r] = normalized_variation(field, cfg.q).tildeV;
  });
  return out;
}

/// One row per grid size (in the given order): KS distance of V~ to N(0,1),
/// sample moments, exact E[V~^2] and the unit-constant Berry-Esseen rate.
inline std::vector<ReportRow> run_clt_experiment(const ExperimentConfig& cfg) {
  detail::validate_config(cfg);
  const Regime reg = classify_regime(cfg.alpha, cfg.beta, cfg.q);
  detail::require(reg.case_id != 6,
                  "verify-clt: both exponents exceed 1 - 1/(2q) (regime 6, Hermite limit); "
                  "use the non-central study instead");
  std::vector<ReportRow> rows;
  for (const GridSize& g : cfg.grid_sizes) {
    const auto t0 = detail::Clock::now();
    const std::vector<double> v = simulate_normalized_variations(cfg, g);
    const SampleMoments mom = sample_moments(v);
    ReportRow row;
    row.n = g.n;
    row.m = g.m;
    row.replications = cfg.replications;
    row.ks_distance = ks_distance(v);
    row.sample_mean = mom.mean;
    row.sample_variance = mom.variance;
    row.exact_expected_square = expected_square(cfg.alpha, cfg.beta, cfg.q, g.n, g.m).value;
    row.rate_bound = berry_esseen_rate(cfg.alpha, cfg.beta, cfg.q, static_cast<double>(g.n),
                                       static_cast<double>(g.m));
    row.wall_time_seconds = cfg.record_timing ? detail::seconds_since(t0) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

struct KernelLevel {
  GridSize grid;
  double norm_squared = 0.0;  // ||h_{N,M}||^2
  double expected_square = 0.0;  // q! ||h_{N,M}||^2
};

struct CrossLevel {
  GridSize coarse;
  GridSize fine;
  double exact_covariance = 0.0;   // q! <h_coarse, h_fine>
  double exact_correlation = 0.0;
  double distance_squared = 0.0;   // ||h_fine - h_coarse||^2
  double mc_covariance = 0.0;
  double mc_standard_error = 0.0;
  double mc_correlation = 0.0;
};

struct NoncentralReport {
  std::vector<ReportRow> rows;
  std::vector<KernelLevel> levels;
  std::vector<CrossLevel> cross;
};

/// Regime-6 study on nested grids (ascending). Each replication samples the
/// finest field once and coarse-grains it to every level, so cross-level
/// covariances of V~ estimate q! <h_N, h_N'> on the same realisations.
inline NoncentralReport run_noncentral_study(const ExperimentConfig& cfg) {
  detail::validate_config(cfg);
  detail::require(cfg.q.value() >= 2 &&
                      classify_regime(cfg.alpha, cfg.beta, cfg.q).case_id == 6,
                  "non-central study requires alpha, beta > 1 - 1/(2q)");
  const auto& grids = cfg.grid_sizes;
  for (std::size_t k = 1; k < grids.size(); ++k) {
    const bool nested = grids[k].n % grids[k - 1].n == 0 && grids[k].m % grids[k - 1].m == 0 &&
                        detail::is_power_of_two(grids[k].n / grids[k - 1].n) &&
                        detail::is_power_of_two(grids[k].m / grids[k - 1].m) &&
                        !(grids[k] == grids[k - 1]);
    detail::require(nested, "non-central study requires ascending dyadically nested grids");
  }
  const auto t0 = detail::Clock::now();
  const GridSize finest = grids.back();
  const FieldSampler sampler(cfg.alpha, cfg.beta, finest.n, finest.m);
  const std::size_t levels = grids.size();
  std::vector<std::vector<double>> v(levels, std::vector<double>(cfg.replications));
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    const IncrementField fine = sampler.sample({cfg.master_seed, r});
    for (std::size_t l = 0; l < levels; ++l) {
      const IncrementField f = coarse_grain(fine, finest.n / grids[l].n, finest.m / grids[l].m);
      v[l][r] = normalized_variation(f, cfg.q).tildeV;
    }
  });
  const double elapsed = cfg.record_timing ? detail::seconds_since(t0) : 0.0;

  NoncentralReport rep;
  for (std::size_t l = 0; l < levels; ++l) {
    const GridSize g = grids[l];
    const SampleMoments mom = sample_moments(v[l]);
    ReportRow row;
    row.n = g.n;
    row.m = g.m;
    row.replications = cfg.replications;
    row.ks_distance = ks_distance(v[l]);
    row.sample_mean = mom.mean;
    row.sample_variance = mom.variance;
    row.exact_expected_square = expected_square(cfg.alpha, cfg.beta, cfg.q, g.n, g.m).value;
    row.wall_time_seconds = elapsed;
    rep.rows.push_back(row);
    const double norm = kernel_inner_product(cfg.alpha, cfg.beta, cfg.q, {g.n, g.m, g.n, g.m}).value;
    rep.levels.push_back({g, norm, factorial(cfg.q.value()) * norm});
  }
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    const GridSize a = grids[l];
    const GridSize b = grids[l + 1];
    const GridPair pair{a.n, a.m, b.n, b.m};
    CrossLevel c;
    c.coarse = a;
    c.fine = b;
    c.exact_covariance = factorial(cfg.q.value()) *
                         kernel_inner_product(cfg.alpha, cfg.beta, cfg.q, pair).value;
    c.exact_correlation = c.exact_covariance / std::sqrt(rep.levels[l].expected_square *
                                                         rep.levels[l + 1].expected_square);
    c.distance_squared = kernel_distance_squared(cfg.alpha, cfg.beta, cfg.q, pair);
    const ProductMoment pm = product_moment(v[l], v[l + 1]);
    c.mc_covariance = pm.mean;
    c.mc_standard_error = pm.standard_error;
    c.mc_correlation = pm.mean / std::sqrt(rep.rows[l].sample_variance * rep.rows[l + 1].sample_variance);
    rep.cross.push_back(c);
  }
  return rep;
}

struct CovarianceEntry {
  Point p1;
  Point p2;
  double mc_covariance = 0.0;
  double mc_standard_error = 0.0;
  double limit_covariance = 0.0;  // Hermite sheet covariance
  double exact_covariance = 0.0;  // finite-grid covariance of the partial sums
};

struct CovarianceReport {
  std::vector<CovarianceEntry> entries;
  double max_abs_deviation = 0.0;         // |MC - limit|, maximised over entries
  double standard_error_at_max = 0.0;
};

/// Monte Carlo covariance of the partial-sum process at point pairs against the
/// Hermite sheet covariance. Uses the first grid of the config. Requires regime 6
/// or q = 1 (first chaos, where the limit is the fractional Brownian sheet itself).
inline CovarianceReport covariance_check(const ExperimentConfig& cfg,
                                         std::span<const std::pair<Point, Point>> pairs) {
  detail::validate_config(cfg);
  detail::require(cfg.q.value() == 1 || classify_regime(cfg.alpha, cfg.beta, cfg.q).case_id == 6,
                  "covariance check requires q = 1 or alpha, beta > 1 - 1/(2q)");
  detail::require(!pairs.empty(), "covariance check requires at least one point pair");
  const GridSize g = cfg.grid_sizes.front();
  std::vector<Point> points;
  for (const auto& [a, b] : pairs) {
    points.push_back(a);
    points.push_back(b);
  }
  const FieldSampler sampler(cfg.alpha, cfg.beta, g.n, g.m);
  std::vector<std::vector<double>> values(points.size(), std::vector<double>(cfg.replications));
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    const IncrementField field = sampler.sample({cfg.master_seed, r});
    const std::vector<double> ps = partial_sum_process(field, cfg.q, points);
    for (std::size_t k = 0; k < ps.size(); ++k) values[k][r] = ps[k];
  });
  CovarianceReport rep;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    CovarianceEntry e;
    e.p1 = pairs[k].first;
    e.p2 = pairs[k].second;
    const ProductMoment pm = product_moment(values[2 * k], values[2 * k + 1]);
    e.mc_covariance = pm.mean;
    e.mc_standard_error = pm.standard_error;
    e.limit_covariance = hermite_sheet_covariance(cfg.q, cfg.alpha, cfg.beta, e.p1, e.p2);
    e.exact_covariance = partial_sum_covariance(cfg.alpha, cfg.beta, cfg.q, g.n, g.m, e.p1, e.p2);
    const double dev = std::fabs(e.mc_covariance - e.limit_covariance);
    if (k == 0 || dev > rep.max_abs_deviation) {
      rep.max_abs_deviation = dev;
      rep.standard_error_at_max = e.mc_standard_error;
    }
    rep.entries.push_back(e);
  }
  return rep;
}

struct RateRow {
  GridSize grid;
  double expected_square = 0.0;
  double deviation = 0.0;  // |q^{-1} T2 - 1|
  double rate_bound = std::numeric_limits<double>::quiet_NaN();
};

struct RateReport {
  std::vector<RateRow> rows;
  double fitted_exponent = 0.0;  // slope of log deviation against log N
};

/// Deterministic convergence study of q^{-1} T2 -> 1 over the configured grids.
inline RateReport run_rate_study(const ExperimentConfig& cfg) {
  detail::validate_config(cfg);
  RateReport rep;
  std::vector<std::pair<double, double>> pts;
  const bool clt = cfg.q.value() >= 2 && classify_regime(cfg.alpha, cfg.beta, cfg.q).case_id != 6;
  for (const GridSize& g : cfg.grid_sizes) {
    RateRow row;
    row.grid = g;
    row.expected_square = t2_exact(cfg.alpha, cfg.beta, cfg.q, g.n, g.m).value / cfg.q.value();
    row.deviation = std::fabs(row.expected_square - 1.0);
    if (clt)
      row.rate_bound = berry_esseen_rate(cfg.alpha, cfg.beta, cfg.q, static_cast<double>(g.n),
                                         static_cast<double>(g.m));
    pts.emplace_back(static_cast<double>(g.n), row.deviation);
    rep.rows.push_back(row);
  }
  if (pts.size() >= 3) rep.fitted_exponent = fit_rate_exponent(pts);
  return rep;
}

/// Mean square of unnormalised rectangle increments at one grid resolution.
struct ScaleMoment {
  double grid_size = 0.0;
  double mean_square = 0.0;
};

struct HurstEstimate {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
};

/// Log-regression estimator: mean squares scale as N^{-2a} at fixed M and as
/// M^{-2b} at fixed N.
inline HurstEstimate estimate_hurst(std::span<const ScaleMoment> along_alpha,
                                    std::span<const ScaleMoment> along_beta) {
  detail::require(along_alpha.size() >= 3 && along_beta.size() >= 3,
                  "estimate_hurst requires at least 3 scales per axis");
  auto slope = [](std::span<const ScaleMoment> s) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& sm : s) pts.emplace_back(sm.grid_size, sm.mean_square);
    return fit_rate_exponent(pts);
  };
  return {-0.5 * slope(along_alpha), -0.5 * slope(along_beta)};
}

/// Axis-wise quadratic variations of a sheet at dyadic coarsenings 1, 2, ..., 2^{scales-1}
/// of one axis with the other axis at full resolution.
inline std::pair<std::vector<ScaleMoment>, std::vector<ScaleMoment>> axis_quadratic_variations(
    const SheetGrid& w, int scales) {
  detail::require(scales >= 3, "estimate_hurst requires at least 3 scales per axis");
  const std::size_t span = std::size_t{1} << (scales - 1);
  detail::require(w.n % span == 0 && w.m % span == 0,
                  "sheet grid must be divisible by 2^(scales-1) on both axes");
  std::vector<ScaleMoment> along_n;
  std::vector<ScaleMoment> along_m;
  for (int k = 0; k < scales; ++k) {
    const std::size_t step = std::size_t{1} << k;
    std::vector<double> sq;
    sq.reserve((w.n / step) * w.m);
    for (std::size_t i = 0; i + step <= w.n; i += step)
      for (std::size_t j = 0; j < w.m; ++j) {
        const double d = w(i + step, j + 1) - w(i, j + 1) - w(i + step, j) + w(i, j);
        sq.push_back(d * d);
      }
    along_n.push_back({static_cast<double>(w.n / step), pairwise_mean(sq)});
    sq.clear();
    for (std::size_t i = 0; i < w.n; ++i)
      for (std::size_t j = 0; j + step <= w.m; j += step) {
        const double d = w(i + 1, j + step) - w(i, j + step) - w(i + 1, j) + w(i, j);
        sq.push_back(d * d);
      }
    along_m.push_back({static_cast<double>(w.m / step), pairwise_mean(sq)});
  }
  return {along_n, along_m};
}

inline HurstEstimate estimate_hurst(const SheetGrid& w, int scales = 3) {
  const auto [an, am] = axis_quadratic_variations(w, scales);
  return estimate_hurst(an, am);
}

/// Simulates `replications` sheets on the first grid and estimates (alpha, beta) for each.
inline std::vector<HurstEstimate> run_hurst_experiment(const ExperimentConfig& cfg, int scales = 3) {
  detail::validate_config(cfg);
  const GridSize g = cfg.grid_sizes.front();
  const FieldSampler sampler(cfg.alpha, cfg.beta, g.n, g.m);
  std::vector<HurstEstimate> out(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    out[r] = estimate_hurst(reconstruct_sheet(sampler.sample({cfg.master_seed, r})), scales);
  });
  return out;
}

}  // namespace hermvar
