#pragma once

// Closed-form covariance kernels of fractional Brownian motion and sheet,
// indicator inner products in the canonical Hilbert space, and Hermite
// polynomials normalised so that H_2(x) = (x^2 - 1) / 2.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>

#include "hermvar/errors.hpp"

namespace hermvar {

/// Hurst index in the open interval (0, 1).
class HurstExponent {
 public:
  explicit HurstExponent(double value) : value_(value) {
    detail::require(value > 0.0 && value < 1.0,
                    "Hurst exponent must lie in (0,1), got " + std::to_string(value));
  }
  double value() const { return value_; }
  friend bool operator==(HurstExponent a, HurstExponent b) { return a.value_ == b.value_; }

 private:
  double value_;
};

/// Order q >= 1 of the Wiener chaos / Hermite polynomial.
class ChaosOrder {
 public:
  explicit ChaosOrder(int q) : q_(q) {
    detail::require(q >= 1, "chaos order must be >= 1, got " + std::to_string(q));
  }
  int value() const { return q_; }
  friend bool operator==(ChaosOrder a, ChaosOrder b) { return a.q_ == b.q_; }

 private:
  int q_;
};

/// Closed time interval [lo, hi] inside [0, 1].
class Interval {
 public:
  Interval(double lo, double hi) : lo_(lo), hi_(hi) {
    detail::require(lo <= hi, "interval requires lo <= hi");
    detail::require(lo >= 0.0 && hi <= 1.0, "interval must lie inside [0,1]");
  }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double length() const { return hi_ - lo_; }

 private:
  double lo_;
  double hi_;
};

/// Point of the unit square; `s` runs along the alpha axis, `t` along the beta axis.
struct Point {
  double s;
  double t;
};

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
  return c;
}

namespace detail {

// a (a-1) ... (a-k+1)
inline double falling(double a, int k) {
  double f = 1.0;
  for (int m = 0; m < k; ++m) f *= (a - m);
  return f;
}

// Generalised binomial coefficient C(a, k) for real a.
inline double real_binomial(double a, int k) { return falling(a, k) / factorial(k); }

inline constexpr std::int64_t kSeriesLagStart = 4;
inline constexpr int kSeriesTerms = 24;

}  // namespace detail

/// Autocovariance of fractional Gaussian noise,
/// r(z) = (|z+1|^{2g} + |z-1|^{2g} - 2|z|^{2g}) / 2.
inline double fgn_autocovariance(HurstExponent gamma, std::int64_t z) {
  const double h2 = 2.0 * gamma.value();
  const double az = static_cast<double>(z < 0 ? -z : z);
  if (z == 0) return 1.0;
  if (h2 == 1.0) return 0.0;
  if (az == 1.0) return std::exp2(h2 - 1.0) - 1.0;
  if (az < static_cast<double>(detail::kSeriesLagStart)) {
    // z^{2g} ((1+u)^{2g} - 1 + (1-u)^{2g} - 1) / 2 with u = 1/z
    const double u = 1.0 / az;
    return 0.5 * std::pow(az, h2) *
           (std::expm1(h2 * std::log1p(u)) + std::expm1(h2 * std::log1p(-u)));
  }
  // z^{2g} sum_{k>=1} C(2g, 2k) z^{-2k}; all terms share a sign, summed smallest first
  const double inv2 = 1.0 / (az * az);
  std::array<double, detail::kSeriesTerms> terms{};
  double pw = inv2;
  for (int k = 1; k <= detail::kSeriesTerms; ++k) {
    terms[k - 1] = detail::real_binomial(h2, 2 * k) * pw;
    pw *= inv2;
  }
  double acc = 0.0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) acc += *it;
  return std::pow(az, h2) * acc;
}

/// Covariance of fractional Brownian motion, (s^{2g} + t^{2g} - |s-t|^{2g}) / 2.
inline double fbm_covariance(HurstExponent gamma, double s, double t) {
  detail::require(s >= 0.0 && t >= 0.0, "fbm covariance requires nonnegative times");
  const double h2 = 2.0 * gamma.value();
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::fabs(s - t), h2));
}

/// <1_a, 1_b> in the Hilbert space of fBm with index gamma.
///
/// Near intervals use the four-corner second difference; for intervals whose
/// centre distance exceeds eight times the summed half-lengths the second
/// difference is replaced by its Taylor series in the half-lengths.
inline double interval_inner_product(HurstExponent gamma, Interval a, Interval b) {
  if (a.length() == 0.0 || b.length() == 0.0) return 0.0;
  const double h2 = 2.0 * gamma.value();
  const double h1 = 0.5 * a.length();
  const double hb = 0.5 * b.length();
  const double d = std::fabs(0.5 * (b.lo() + b.hi()) - 0.5 * (a.lo() + a.hi()));
  const double s = h1 + hb;
  if (s * 8.0 > d) {
    auto f = [h2](double x) { return std::pow(std::fabs(x), h2); };
    return 0.5 * (f(a.hi() - b.lo()) + f(a.lo() - b.hi()) - f(a.lo() - b.lo()) -
                  f(a.hi() - b.hi()));
  }
  // sum_{k even} f^{(k)}(d) (s^k - t^k) / k!,  f(x) = x^{2g}
  const double t = std::fabs(h1 - hb);
  double acc = 0.0;
  double sk = s * s;
  double tk = t * t;
  for (int k = 2; k <= 20; k += 2) {
    const double term =
        detail::falling(h2, k) * std::pow(d, h2 - k) * (sk - tk) / factorial(k);
    acc += term;
    if (std::fabs(term) <= 1e-18 * std::fabs(acc)) break;
    sk *= s * s;
    tk *= t * t;
  }
  return acc;
}

/// Covariance of the anisotropic fractional Brownian sheet (product form).
inline double fbs_covariance(HurstExponent alpha, HurstExponent beta, Point p1, Point p2) {
  return fbm_covariance(alpha, p1.s, p2.s) * fbm_covariance(beta, p1.t, p2.t);
}

/// Probabilists' Hermite polynomial He_n via the three-term recursion.
inline double hermite_probabilists(int n, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// H_q(x) = He_q(x) / q!.
inline double hermite(ChaosOrder q, double x) {
  return hermite_probabilists(q.value(), x) / factorial(q.value());
}

/// Effective Hurst index q(g - 1) + 1 of the Hermite sheet along one axis.
inline double hermite_sheet_exponent(ChaosOrder q, HurstExponent gamma) {
  return q.value() * (gamma.value() - 1.0) + 1.0;
}

/// Covariance of the Hermite sheet: R_{q(a-1)+1}(s1, s2) R_{q(b-1)+1}(t1, t2).
inline double hermite_sheet_covariance(ChaosOrder q, HurstExponent alpha, HurstExponent beta,
                                       Point p1, Point p2) {
  const double ea = hermite_sheet_exponent(q, alpha);
  const double eb = hermite_sheet_exponent(q, beta);
  detail::require(ea > 0.0 && eb > 0.0,
                  "hermite sheet covariance needs q(alpha-1)+1 > 0 and q(beta-1)+1 > 0");
  return fbm_covariance(HurstExponent(ea), p1.s, p2.s) *
         fbm_covariance(HurstExponent(eb), p1.t, p2.t);
}

}  // namespace hermvar
