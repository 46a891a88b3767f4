#pragma once

// Deterministic moment quantities: one-dimensional grid covariance sums, T2,
// E[V~^2], inner products of the chaos kernels h_{N,M}, the quadruple sums
// a_N and the second moment of T1. All sums accumulate in long double with
// Neumaier compensation.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hermvar/errors.hpp"
#include "hermvar/kernels.hpp"
#include "hermvar/normalization.hpp"
#include "hermvar/summation.hpp"

namespace hermvar {

enum class FormulaId { S_GRID, T2, EV2, H_INNER, A_QUAD, ET1SQ };

struct MomentValue {
  double value = 0.0;
  FormulaId formula = FormulaId::S_GRID;
};

/// Grid sizes of two kernels h_{N,M} and h_{N',M'}.
struct GridPair {
  std::size_t n = 1;
  std::size_t m = 1;
  std::size_t n2 = 1;
  std::size_t m2 = 1;
};

/// Default size cap for the O(N^4) quadruple sums.
inline constexpr std::size_t kQuadrupleCap = 64;

namespace detail {

inline long double ipow(long double x, int e) {
  long double r = 1;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

inline double grid_power(std::size_t n, double gamma) {
  return std::pow(static_cast<double>(n), -2.0 * gamma);
}

/// sum_{i=0..last1} sum_{i'=0..last2} <1_{Delta i}^{(n1)}, 1_{Delta i'}^{(n2)}>^q.
inline long double axis_cross_sum(HurstExponent g, int q, std::size_t n1, std::size_t last1,
                                  std::size_t n2, std::size_t last2) {
  require(n1 >= 1 && n2 >= 1 && last1 < n1 && last2 < n2, "axis_cross_sum: index out of range");
  CompensatedSum<long double> acc;
  if (n1 == n2) {
    // Toeplitz: group by lag z = i - i'
    const auto l1 = static_cast<std::int64_t>(last1);
    const auto l2 = static_cast<std::int64_t>(last2);
    const long double scale = ipow(grid_power(n1, g.value()), q);
    for (std::int64_t z = -l2; z <= l1; ++z) {
      const std::int64_t lo = std::max<std::int64_t>(0, z);
      const std::int64_t hi = std::min<std::int64_t>(l1, l2 + z);
      if (hi < lo) continue;
      acc += static_cast<long double>(hi - lo + 1) * ipow(fgn_autocovariance(g, z), q);
    }
    return scale * acc.value();
  }
  if (n2 % n1 == 0 || n1 % n2 == 0) {
    // Nested grids: a coarse cell is the union of k fine cells.
    const bool first_coarse = n2 % n1 == 0;
    const std::size_t fine = first_coarse ? n2 : n1;
    const std::size_t k = fine / (first_coarse ? n1 : n2);
    const std::size_t last_c = first_coarse ? last1 : last2;
    const std::size_t last_f = first_coarse ? last2 : last1;
    const double fine_scale = grid_power(fine, g.value());
    for (std::size_t i = 0; i <= last_c; ++i) {
      for (std::size_t f = 0; f <= last_f; ++f) {
        double c = 0.0;
        for (std::size_t u = 0; u < k; ++u)
          c += fgn_autocovariance(g, static_cast<std::int64_t>(k * i + u) - static_cast<std::int64_t>(f));
        acc += ipow(fine_scale * c, q);
      }
    }
    return acc.value();
  }
  for (std::size_t i = 0; i <= last1; ++i) {
    const Interval a(static_cast<double>(i) / n1, static_cast<double>(i + 1) / n1);
    for (std::size_t j = 0; j <= last2; ++j) {
      const Interval b(static_cast<double>(j) / n2, static_cast<double>(j + 1) / n2);
      acc += ipow(interval_inner_product(g, a, b), q);
    }
  }
  return acc.value();
}

inline std::vector<std::vector<long double>> grid_gram_powers(HurstExponent g, std::size_t n,
                                                              int max_power) {
  // powers[e][i*n+j] = <1_{Delta i}, 1_{Delta j}>^e
  std::vector<std::vector<long double>> powers(max_power + 1, std::vector<long double>(n * n));
  const double scale = grid_power(n, g.value());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const long double x =
          scale * fgn_autocovariance(g, static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j));
      long double p = 1;
      for (int e = 0; e <= max_power; ++e) {
        powers[e][i * n + j] = p;
        p *= x;
      }
    }
  }
  return powers;
}

}  // namespace detail

/// S_N = sum_{i,i'<N} <1_{Delta i}, 1_{Delta i'}>^q = N^{-2gq} sum_z (N-|z|) r(z)^q.
inline MomentValue grid_covariance_sum(HurstExponent gamma, ChaosOrder q, std::size_t n) {
  detail::require(n >= 1, "grid_covariance_sum requires N >= 1");
  CompensatedSum<long double> acc;
  acc += static_cast<long double>(n);
  for (std::size_t z = 1; z < n; ++z)
    acc += 2.0L * static_cast<long double>(n - z) *
           detail::ipow(fgn_autocovariance(gamma, static_cast<std::int64_t>(z)), q.value());
  const long double scale = detail::ipow(detail::grid_power(n, gamma.value()), q.value());
  return {static_cast<double>(scale * acc.value()), FormulaId::S_GRID};
}

/// T2 = phi^2 / (q-1)! * S_N(alpha) * S_M(beta).
inline MomentValue t2_exact(HurstExponent alpha, HurstExponent beta, ChaosOrder q, std::size_t n,
                            std::size_t m) {
  const long double ph = phi(alpha, beta, q, static_cast<double>(n), static_cast<double>(m));
  const long double sn = grid_covariance_sum(alpha, q, n).value;
  const long double sm = grid_covariance_sum(beta, q, m).value;
  return {static_cast<double>(ph * ph * sn * sm / factorial(q.value() - 1)), FormulaId::T2};
}

/// E[V~^2] = phi^2 / q! * S_N(alpha) * S_M(beta)  (= T2 / q).
inline MomentValue expected_square(HurstExponent alpha, HurstExponent beta, ChaosOrder q,
                                   std::size_t n, std::size_t m) {
  const long double ph = phi(alpha, beta, q, static_cast<double>(n), static_cast<double>(m));
  const long double sn = grid_covariance_sum(alpha, q, n).value;
  const long double sm = grid_covariance_sum(beta, q, m).value;
  return {static_cast<double>((ph / factorial(q.value())) * ph * sn * sm), FormulaId::EV2};
}

/// <h_{N,M}, h_{N',M'}> with h_{N,M} = phi(N,M)/q! sum_ij 1_{Delta ij}^{(x)q}.
/// E[V~_{N,M} V~_{N',M'}] = q! times this value.
inline MomentValue kernel_inner_product(HurstExponent alpha, HurstExponent beta, ChaosOrder q,
                                        GridPair grids) {
  const int qv = q.value();
  const long double ph1 = phi(alpha, beta, q, static_cast<double>(grids.n), static_cast<double>(grids.m));
  const long double ph2 = phi(alpha, beta, q, static_cast<double>(grids.n2), static_cast<double>(grids.m2));
  const long double sa = detail::axis_cross_sum(alpha, qv, grids.n, grids.n - 1, grids.n2, grids.n2 - 1);
  const long double sb = detail::axis_cross_sum(beta, qv, grids.m, grids.m - 1, grids.m2, grids.m2 - 1);
  const long double qf = factorial(qv);
  return {static_cast<double>(ph1 / qf * ph2 / qf * sa * sb), FormulaId::H_INNER};
}

/// ||h_{N,M} - h_{N',M'}||^2 via the three-term expansion.
inline double kernel_distance_squared(HurstExponent alpha, HurstExponent beta, ChaosOrder q,
                                      GridPair grids) {
  const double a = kernel_inner_product(alpha, beta, q, {grids.n, grids.m, grids.n, grids.m}).value;
  const double b = kernel_inner_product(alpha, beta, q, {grids.n2, grids.m2, grids.n2, grids.m2}).value;
  const double c = kernel_inner_product(alpha, beta, q, grids).value;
  return a + b - 2.0 * c;
}

/// E[P(p1) P(p2)] for the normalised partial-sum process on one N x M grid
/// (= q! <h_{N,M}(p1), h_{N,M}(p2)>).
inline double partial_sum_covariance(HurstExponent alpha, HurstExponent beta, ChaosOrder q,
                                     std::size_t n, std::size_t m, Point p1, Point p2) {
  auto last = [](std::size_t len, double t) {
    detail::require(t >= 0.0 && t <= 1.0, "partial-sum coordinates must lie in [0,1]");
    return static_cast<std::size_t>(std::floor(static_cast<double>(len - 1) * t));
  };
  const int qv = q.value();
  const long double ph = phi(alpha, beta, q, static_cast<double>(n), static_cast<double>(m));
  const long double sa = detail::axis_cross_sum(alpha, qv, n, last(n, p1.s), n, last(n, p2.s));
  const long double sb = detail::axis_cross_sum(beta, qv, m, last(m, p1.t), m, last(m, p2.t));
  return static_cast<double>(ph * ph / factorial(qv) * sa * sb);
}

/// a_N(p, g, a, b, c, d) = sum_{i,i',k,k'<N} x_{ik}^a x_{ik'}^b x_{i'k}^c x_{i'k'}^d
///                         x_{ii'}^{p+1} x_{kk'}^{p+1},  x_{ij} = <1_{Delta i}, 1_{Delta j}>.
inline MomentValue quadruple_sum(HurstExponent gamma, ChaosOrder q, int p, int a, int b, int c,
                                 int d, std::size_t n, std::size_t cap = kQuadrupleCap) {
  const int qv = q.value();
  detail::require(qv >= 2, "quadruple_sum requires q >= 2");
  detail::require(p >= 0 && p <= qv - 2, "quadruple_sum requires p in {0,...,q-2}");
  detail::require(a >= 0 && b >= 0 && c >= 0 && d >= 0 && a + b == qv - 1 - p &&
                      c + d == qv - 1 - p,
                  "quadruple_sum requires a+b = c+d = q-1-p");
  detail::require(n >= 1, "quadruple_sum requires N >= 1");
  detail::require(n <= cap, "quadruple_sum: N=" + std::to_string(n) + " exceeds the size cap " +
                                std::to_string(cap));
  const auto pw = detail::grid_gram_powers(gamma, n, qv);
  const auto& xa = pw[a];
  const auto& xb = pw[b];
  const auto& xc = pw[c];
  const auto& xd = pw[d];
  const auto& xp = pw[p + 1];
  CompensatedSum<long double> total;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t i2 = 0; i2 < n; ++i2) {
      const long double wii = xp[i * n + i2];
      if (wii == 0) continue;
      // inner[k] = sum_{k'} x_{ik'}^b x_{i'k'}^d x_{kk'}^{p+1}
      long double acc = 0;
      for (std::size_t k = 0; k < n; ++k) {
        long double s = 0;
        for (std::size_t k2 = 0; k2 < n; ++k2)
          s += xb[i * n + k2] * xd[i2 * n + k2] * xp[k * n + k2];
        acc += xa[i * n + k] * xc[i2 * n + k] * s;
      }
      total += wii * acc;
    }
  }
  return {static_cast<double>(total.value()), FormulaId::A_QUAD};
}

namespace detail {

// Weight of the a-th contraction pattern (a, n-a, n-a, a) in E[T1^2] for given p.
inline long double t1_weight(int q, int p, int a) {
  const int n = q - 1 - p;
  const long double pf = factorial(p);
  const long double cq = binomial(q - 1, p);
  const long double nf = factorial(n);
  const long double cn = binomial(n, a);
  return pf * pf * cq * cq * cq * cq * nf * nf * cn * cn;
}

}  // namespace detail

/// E[T1^2] = phi^4/(q-1)!^4 sum_p (p!)^2 C(q-1,p)^4 (n!)^2 sum_a C(n,a)^2
///           a_N(p, alpha, a, n-a, n-a, a) b_M(p, beta, a, n-a, n-a, a),  n = q-1-p.
inline MomentValue t1_second_moment(HurstExponent alpha, HurstExponent beta, ChaosOrder q,
                                    std::size_t n, std::size_t m, std::size_t cap = kQuadrupleCap) {
  const int qv = q.value();
  if (qv == 1) return {0.0, FormulaId::ET1SQ};
  detail::require(n <= cap && m <= cap, "t1_second_moment: grid exceeds the size cap " + std::to_string(cap));
  CompensatedSum<long double> acc;
  for (int p = 0; p <= qv - 2; ++p) {
    const int k = qv - 1 - p;
    for (int a = 0; a <= k; ++a) {
      const long double an = quadruple_sum(alpha, q, p, a, k - a, k - a, a, n, cap).value;
      const long double bm = quadruple_sum(beta, q, p, a, k - a, k - a, a, m, cap).value;
      acc += detail::t1_weight(qv, p, a) * an * bm;
    }
  }
  const long double ph = phi(alpha, beta, q, static_cast<double>(n), static_cast<double>(m));
  const long double qf = factorial(qv - 1);
  const long double pre = (ph * ph / (qf * qf)) * (ph * ph / (qf * qf));
  return {static_cast<double>(pre * acc.value()), FormulaId::ET1SQ};
}

/// Same quantity by direct summation over four cells of the two-dimensional grid
/// (no factorisation into a_N b_M). O((NM)^4): only for tiny grids.
inline MomentValue t1_second_moment_direct(HurstExponent alpha, HurstExponent beta, ChaosOrder q,
                                           std::size_t n, std::size_t m) {
  const int qv = q.value();
  if (qv == 1) return {0.0, FormulaId::ET1SQ};
  const std::size_t cells = n * m;
  detail::require(cells <= 16, "t1_second_moment_direct is limited to N*M <= 16");
  const auto xa = detail::grid_gram_powers(alpha, n, 1)[1];
  const auto xb = detail::grid_gram_powers(beta, m, 1)[1];
  auto inner = [&](std::size_t u, std::size_t v) -> long double {
    return xa[(u / m) * n + (v / m)] * xb[(u % m) * m + (v % m)];
  };
  CompensatedSum<long double> acc;
  for (std::size_t c1 = 0; c1 < cells; ++c1)
    for (std::size_t c1b = 0; c1b < cells; ++c1b)
      for (std::size_t c2 = 0; c2 < cells; ++c2)
        for (std::size_t c2b = 0; c2b < cells; ++c2b) {
          const long double x11 = inner(c1, c1b);
          const long double x22 = inner(c2, c2b);
          const long double y1 = inner(c1, c2);
          const long double y2 = inner(c1, c2b);
          const long double y3 = inner(c1b, c2);
          const long double y4 = inner(c1b, c2b);
          for (int p = 0; p <= qv - 2; ++p) {
            const int k = qv - 1 - p;
            for (int a = 0; a <= k; ++a) {
              acc += detail::t1_weight(qv, p, a) * detail::ipow(x11, p + 1) *
                     detail::ipow(x22, p + 1) * detail::ipow(y1, a) * detail::ipow(y2, k - a) *
                     detail::ipow(y3, k - a) * detail::ipow(y4, a);
            }
          }
        }
  const long double ph = phi(alpha, beta, q, static_cast<double>(n), static_cast<double>(m));
  const long double qf = factorial(qv - 1);
  const long double pre = (ph * ph / (qf * qf)) * (ph * ph / (qf * qf));
  return {static_cast<double>(pre * acc.value()), FormulaId::ET1SQ};
}

}  // namespace hermvar
