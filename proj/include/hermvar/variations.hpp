#pragma once

// Hermite variations V = sum_ij H_q(X_ij) of a normalised increment field, the
// normalised statistic V~ = phi N^{-aq} M^{-bq} V and its two-parameter
// partial-sum process.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "hermvar/kernels.hpp"
#include "hermvar/normalization.hpp"
#include "hermvar/simulator.hpp"
#include "hermvar/summation.hpp"

namespace hermvar {

struct VariationReport {
  double V = 0.0;
  double tildeV = 0.0;
  double phi_used = 0.0;
  std::optional<Regime> regime;  // empty for q = 1
  std::size_t n = 0;
  std::size_t m = 0;
  int q = 0;
};

namespace detail {

inline std::vector<double> hermite_values(const IncrementField& field, ChaosOrder q) {
  std::vector<double> h(field.data.size());
  const double inv_fact = 1.0 / factorial(q.value());
  for (std::size_t k = 0; k < h.size(); ++k)
    h[k] = hermite_probabilists(q.value(), field.data[k]) * inv_fact;
  return h;
}

// Pairwise sum of the row-major block i <= last_i, j <= last_j.
inline double block_sum(std::span<const double> values, std::size_t m, std::size_t last_i,
                        std::size_t last_j) {
  if (last_j + 1 == m) return pairwise_sum(values.first((last_i + 1) * m));
  std::vector<double> buf;
  buf.reserve((last_i + 1) * (last_j + 1));
  for (std::size_t i = 0; i <= last_i; ++i)
    for (std::size_t j = 0; j <= last_j; ++j) buf.push_back(values[i * m + j]);
  return pairwise_sum(buf);
}

inline double variation_scale(const IncrementField& field, ChaosOrder q, double phi_value) {
  const double qd = q.value();
  return phi_value * std::pow(static_cast<double>(field.n), -field.alpha.value() * qd) *
         std::pow(static_cast<double>(field.m), -field.beta.value() * qd);
}

}  // namespace detail

/// V = sum over all cells of H_q(X_ij), pairwise-summed in row-major order.
inline double hermite_variation(const IncrementField& field, ChaosOrder q) {
  const std::vector<double> h = detail::hermite_values(field, q);
  return pairwise_sum(h);
}

inline VariationReport normalized_variation(const IncrementField& field, ChaosOrder q) {
  VariationReport rep;
  rep.n = field.n;
  rep.m = field.m;
  rep.q = q.value();
  if (q.value() >= 2) rep.regime = classify_regime(field.alpha, field.beta, q);
  rep.phi_used = phi(field.alpha, field.beta, q, static_cast<double>(field.n),
                     static_cast<double>(field.m));
  rep.V = hermite_variation(field, q);
  rep.tildeV = detail::variation_scale(field, q, rep.phi_used) * rep.V;
  return rep;
}

/// Last included index floor((n-1) t) of the partial-sum process.
inline std::size_t partial_sum_last_index(std::size_t n, double t) {
  detail::require(t >= 0.0 && t <= 1.0, "partial-sum coordinates must lie in [0,1]");
  return static_cast<std::size_t>(std::floor(static_cast<double>(n - 1) * t));
}

/// Normalised partial sums over i <= floor((N-1)t), j <= floor((M-1)s) for each
/// point (t along alpha, s along beta). The i = 0 / j = 0 cells are always
/// included, so the process does not vanish on the axes.
inline std::vector<double> partial_sum_process(const IncrementField& field, ChaosOrder q,
                                               std::span<const Point> points) {
  const double phi_value =
      phi(field.alpha, field.beta, q, static_cast<double>(field.n), static_cast<double>(field.m));
  const double scale = detail::variation_scale(field, q, phi_value);
  const std::vector<double> h = detail::hermite_values(field, q);
  std::vector<double> out;
  out.reserve(points.size());
  for (const Point& p : points) {
    const std::size_t li = partial_sum_last_index(field.n, p.s);
    const std::size_t lj = partial_sum_last_index(field.m, p.t);
    out.push_back(scale * detail::block_sum(h, field.m, li, lj));
  }
  return out;
}

}  // namespace hermvar
