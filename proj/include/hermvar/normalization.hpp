#pragma once

// Regime classification of (alpha, beta, q), the limit constants s, iota and
// kappa of the one-dimensional grid sums, the normalisation factor phi and
// the Berry-Esseen rate expressions.

#include <array>
#include <cfloat>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "hermvar/errors.hpp"
#include "hermvar/kernels.hpp"
#include "hermvar/summation.hpp"

namespace hermvar {

enum class LimitKind { gaussian, hermite };

struct Regime {
  int case_id = 1;
  bool axes_swapped = false;
  LimitKind limit_kind = LimitKind::gaussian;

  friend bool operator==(const Regime&, const Regime&) = default;
};

/// Critical Hurst index 1 - 1/(2q).
inline double regime_threshold(ChaosOrder q) { return 1.0 - 1.0 / (2.0 * q.value()); }

namespace detail {

// -1 below the threshold, 0 on it, +1 above. Exact comparison.
inline int axis_side(HurstExponent g, ChaosOrder q) {
  const double th = regime_threshold(q);
  if (g.value() < th) return -1;
  if (g.value() > th) return 1;
  return 0;
}

}  // namespace detail

inline Regime classify_regime(HurstExponent alpha, HurstExponent beta, ChaosOrder q) {
  detail::require(q.value() >= 2, "regime classification requires q >= 2");
  const int a = detail::axis_side(alpha, q);
  const int b = detail::axis_side(beta, q);
  // Case templates are written with the smaller side on the alpha axis.
  const bool swapped = a > b;
  const int lo = swapped ? b : a;
  const int hi = swapped ? a : b;
  int id = 0;
  if (lo == -1 && hi == -1) id = 1;
  else if (lo == -1 && hi == 0) id = 2;
  else if (lo == 0 && hi == 0) id = 3;
  else if (lo == -1 && hi == 1) id = 4;
  else if (lo == 0 && hi == 1) id = 5;
  else id = 6;
  return Regime{id, swapped, id == 6 ? LimitKind::hermite : LimitKind::gaussian};
}

enum class ConstantKind { s, iota, kappa };

inline const char* to_string(ConstantKind k) {
  switch (k) {
    case ConstantKind::s: return "s_gamma";
    case ConstantKind::iota: return "iota";
    case ConstantKind::kappa: return "kappa";
  }
  return "?";
}

struct LimitConstant {
  ConstantKind kind = ConstantKind::s;
  double gamma = 0.0;
  int q = 0;
  double value = 0.0;
  double abs_error_bound = 0.0;
};

namespace detail {

// Hurwitz zeta zeta(sigma, a) for sigma > 1 and a >= 64 by Euler-Maclaurin.
inline long double hurwitz_zeta_large_a(long double sigma, long double a) {
  static constexpr std::array<long double, 7> kBernoulli2j = {
      1.0L / 6, -1.0L / 30, 1.0L / 42, -1.0L / 30, 5.0L / 66, -691.0L / 2730, 7.0L / 6};
  long double acc = std::pow(a, 1 - sigma) / (sigma - 1) + 0.5L * std::pow(a, -sigma);
  long double rising = sigma;  // sigma (sigma+1) ... (sigma+2j-2)
  long double fact = 2;        // (2j)!
  for (std::size_t j = 1; j <= kBernoulli2j.size(); ++j) {
    acc += kBernoulli2j[j - 1] / fact * rising * std::pow(a, -sigma - 2.0L * j + 1);
    rising *= (sigma + 2 * j - 1) * (sigma + 2 * j);
    fact *= (2 * j + 1) * (2 * j + 2);
  }
  return acc;
}

// Coefficients e_0..e_4 of (1 + d_1 y + ... + d_4 y^4)^q truncated at y^4,
// where r(z) = g(2g-1) z^{2g-2} (1 + sum_j d_j z^{-2j}).
inline std::array<long double, 5> tail_expansion(double gamma, int q) {
  const double h2 = 2.0 * gamma;
  const double c2 = real_binomial(h2, 2);
  std::array<long double, 5> d{1, 0, 0, 0, 0};
  for (int j = 1; j <= 4; ++j) d[j] = real_binomial(h2, 2 * j + 2) / c2;
  std::array<long double, 5> e{1, 0, 0, 0, 0};
  for (int m = 0; m < q; ++m) {
    std::array<long double, 5> next{0, 0, 0, 0, 0};
    for (int i = 0; i < 5; ++i)
      for (int j = 0; i + j < 5; ++j) next[i + j] += e[i] * d[j];
    e = next;
  }
  return e;
}

struct SeriesResult {
  long double value;
  long double bound;
};

// r_gamma(z) in long double; far lags use the binomial series because the
// three-power difference loses about z^2 in relative accuracy.
inline long double fgn_autocovariance_ld(double gamma, std::int64_t z) {
  const long double h = 2.0L * gamma;
  const long double x = static_cast<long double>(z);
  if (z <= 1000) return 0.5L * (std::pow(x + 1, h) + std::pow(x - 1, h) - 2 * std::pow(x, h));
  long double acc = 0;
  long double coef = 1;  // falling factorial h (h-1) ... / k!
  for (int k = 1; k <= 12; ++k) {
    coef *= (h - (k - 1)) / k;
    if (k % 2 == 0) acc += coef * std::pow(x, -static_cast<long double>(k));
  }
  return std::pow(x, h) * acc;
}

inline SeriesResult s_series(double gamma, int q, std::int64_t cutoff) {
  CompensatedSum<long double> partial;
  long double rounding = 0;
  for (std::int64_t z = 1; z <= cutoff; ++z) {
    const long double r = fgn_autocovariance_ld(gamma, z);
    const long double term = std::pow(r, q);
    partial += term;
    // error in r is a few ulps of the largest power (direct) or of r (series)
    const long double dr = z <= 1000 ? 4 * LDBL_EPSILON * std::pow(static_cast<long double>(z) + 1, 2.0L * gamma)
                                     : 16 * LDBL_EPSILON * std::fabs(r);
    rounding += q * std::pow(std::fabs(r), q - 1) * dr + 4 * LDBL_EPSILON * std::fabs(term);
  }
  const long double c = std::pow(static_cast<long double>(real_binomial(2.0 * gamma, 2)), q);
  const long double sigma = q * (2.0L - 2.0L * gamma);
  const auto e = tail_expansion(gamma, q);
  const long double a = static_cast<long double>(cutoff) + 1;
  long double tail = 0;
  for (int k = 0; k < 4; ++k) tail += e[k] * hurwitz_zeta_large_a(sigma + 2 * k, a);
  tail *= c;
  const long double truncation = 2 * std::fabs(c * e[4]) * hurwitz_zeta_large_a(sigma + 8, a);
  const long double value = 1 + 2 * (partial.value() + tail);
  // expansion coefficients carry double-precision binomials; final rounding to double
  rounding += 4 * DBL_EPSILON * std::fabs(tail) + 0.5L * DBL_EPSILON * std::fabs(value);
  return {value, 2 * truncation + 2 * rounding};
}

}  // namespace detail

/// s_gamma = sum_{z in Z} r_gamma(z)^q for gamma below the critical index.
///
/// Direct summation up to a cutoff Z plus an asymptotic tail; Z doubles until the
/// reported error bound is <= tol. Results are memoised per (gamma, q, tol).
inline LimitConstant s_gamma(HurstExponent gamma, ChaosOrder q, double tol) {
  detail::require(gamma.value() < regime_threshold(q),
                  "s_gamma requires gamma < 1 - 1/(2q) (series diverges otherwise)");
  detail::require(tol > 0.0, "s_gamma requires tol > 0");
  if (gamma.value() == 0.5) return {ConstantKind::s, 0.5, q.value(), 1.0, 0.0};

  static std::mutex mu;
  static std::map<std::tuple<double, int, double>, LimitConstant> cache;
  const auto key = std::make_tuple(gamma.value(), q.value(), tol);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  detail::SeriesResult res{};
  std::int64_t cutoff = 128;
  for (;; cutoff *= 2) {
    res = detail::s_series(gamma.value(), q.value(), cutoff);
    if (res.bound <= tol) break;
    if (cutoff >= (std::int64_t{1} << 20))
      throw PreconditionError("s_gamma: tolerance " + std::to_string(tol) +
                              " is below the attainable accuracy");
  }
  LimitConstant out{ConstantKind::s, gamma.value(), q.value(), static_cast<double>(res.value),
                    static_cast<double>(res.bound)};
  std::lock_guard lock(mu);
  cache.emplace(key, out);
  return out;
}

/// iota = 2 ((2q-1)(q-1) / (2q^2))^q, the log-corrected limit at the threshold.
inline LimitConstant iota(ChaosOrder q) {
  detail::require(q.value() >= 2, "iota requires q >= 2");
  const double qd = q.value();
  const double v = 2.0 * std::pow((2.0 * qd - 1.0) * (qd - 1.0) / (2.0 * qd * qd), qd);
  return {ConstantKind::iota, regime_threshold(q), q.value(), v, 0.0};
}

/// kappa = g^q (2g-1)^q / ((gq-q+1)(2gq-2q+1)) for gamma above the threshold.
inline LimitConstant kappa(HurstExponent gamma, ChaosOrder q) {
  detail::require(gamma.value() > regime_threshold(q),
                  "kappa requires gamma > 1 - 1/(2q) (denominator vanishes at the threshold)");
  const double g = gamma.value();
  const double qd = q.value();
  const double v =
      std::pow(g * (2.0 * g - 1.0), qd) / ((g * qd - qd + 1.0) * (2.0 * g * qd - 2.0 * qd + 1.0));
  return {ConstantKind::kappa, g, q.value(), v, 0.0};
}

/// Tolerance used for s_gamma inside phi.
inline constexpr double kPhiSeriesTol = 1e-13;

namespace detail {

struct AxisNormalization {
  double constant;  // s, iota or kappa
  double scale;     // power / log factor of the grid size
};

inline AxisNormalization axis_normalization(HurstExponent g, ChaosOrder q, double n) {
  require(n >= 1.0, "grid size must be >= 1");
  const double qd = q.value();
  switch (axis_side(g, q)) {
    case -1:
      return {s_gamma(g, q, kPhiSeriesTol).value, std::pow(n, g.value() * qd - 0.5)};
    case 0:
      require(n > 1.0, "threshold normalisation needs grid size > 1 (log N > 0)");
      return {iota(q).value, std::pow(n, qd - 1.0) / std::sqrt(std::log(n))};
    default:
      return {kappa(g, q).value, std::pow(n, qd - 1.0)};
  }
}

inline double axis_rate_terms(HurstExponent g, ChaosOrder q, double n) {
  const double gv = g.value();
  const double qd = q.value();
  switch (axis_side(g, q)) {
    case -1:
      return 1.0 / n + std::pow(n, 2.0 * gv - 2.0) + std::pow(n, 2.0 * qd * gv - 2.0 * qd + 1.0);
    case 0:
      require(n > 1.0, "threshold rate needs grid size > 1");
      return 1.0 / std::log(n);
    default:
      return std::pow(n, 2.0 * qd - 1.0 - 2.0 * qd * gv);
  }
}

}  // namespace detail

/// Normalisation phi(alpha, beta, N, M) making E[V~^2] -> 1.
///
/// Factorises over the axes: each axis contributes N^{gq-1/2}/sqrt(s) below the
/// threshold, N^{q-1}(log N)^{-1/2}/sqrt(iota) on it and N^{q-1}/sqrt(kappa) above.
/// For q = 1 the grid sums are exactly 1 and phi = 1.
inline double phi(HurstExponent alpha, HurstExponent beta, ChaosOrder q, double n, double m) {
  detail::require(n >= 1.0 && m >= 1.0, "phi requires N, M >= 1");
  if (q.value() == 1) return 1.0;
  const auto a = detail::axis_normalization(alpha, q, n);
  const auto b = detail::axis_normalization(beta, q, m);
  return std::sqrt(factorial(q.value()) / (a.constant * b.constant)) * a.scale * b.scale;
}

/// Berry-Esseen bound with unit constant; every exponent is negative.
inline double berry_esseen_rate(HurstExponent alpha, HurstExponent beta, ChaosOrder q, double n,
                                double m) {
  const Regime reg = classify_regime(alpha, beta, q);
  detail::require(reg.case_id != 6,
                  "berry_esseen_rate: both exponents above 1 - 1/(2q), no central limit");
  return std::sqrt(detail::axis_rate_terms(alpha, q, n) + detail::axis_rate_terms(beta, q, m));
}

}  // namespace hermvar
