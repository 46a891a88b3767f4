#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "hermvar/exact_moments.hpp"
#include "hermvar/harness.hpp"
#include "oracles.hpp"

using namespace hermvar;

namespace {
const ChaosOrder q2(2);
const HurstExponent kBrown(0.5);
}  // namespace

TEST(GridCovarianceSum, Examples) {
  EXPECT_NEAR(grid_covariance_sum(kBrown, q2, 10).value, 0.1, 1e-16);
  for (double g : {0.2, 0.9})
    for (int q : {1, 2, 5}) EXPECT_EQ(grid_covariance_sum(HurstExponent(g), ChaosOrder(q), 1).value, 1.0);
  EXPECT_EQ(grid_covariance_sum(kBrown, q2, 10).formula, FormulaId::S_GRID);
}

TEST(GridCovarianceSum, MatchesBruteForceDoubleSum) {
  for (double g : {0.9, 0.3, 0.7}) {
    for (int q : {1, 2, 3}) {
      const std::size_t n = 50;
      const long double ref = oracle::grid_sum(g, q, n, n - 1, n, n - 1);
      EXPECT_NEAR(grid_covariance_sum(HurstExponent(g), ChaosOrder(q), n).value, static_cast<double>(ref),
                  1e-12 * std::fabs(static_cast<double>(ref)))
          << g << " " << q;
    }
  }
}

TEST(T2, FirstChaosGridSumIsExact) {
  // sum_{i,i'} <1_i, 1_i'> = ||1_{[0,1]}||^2 = 1 for every gamma and N
  for (double g : {0.1, 0.6, 0.95})
    for (std::size_t n : {1, 2, 17, 300}) EXPECT_NEAR(grid_covariance_sum(HurstExponent(g), ChaosOrder(1), n).value, 1.0, 1e-12);
}

TEST(T2, BrownianNormalisationIsExact) {
  for (std::size_t n = 1; n <= 64; ++n)
    for (std::size_t m = 1; m <= 64; ++m) ASSERT_NEAR(t2_exact(kBrown, kBrown, q2, n, m).value / 2, 1.0, 1e-12) << n << " " << m;
}

TEST(T2, ConvergenceExponents) {
  struct Case {
    double g;
    int lo, hi;
    double slope, tol;
  };
  for (const Case& c : {Case{0.9, 6, 12, -0.6, 0.1}, Case{0.3, 4, 10, -1.0, 0.15}}) {
    const HurstExponent h(c.g);
    std::vector<std::pair<double, double>> pts;
    for (int k = c.lo; k <= c.hi; ++k) {
      const std::size_t n = std::size_t{1} << k;
      pts.emplace_back(double(n), std::fabs(t2_exact(h, h, q2, n, n).value / 2 - 1));
    }
    EXPECT_NEAR(fit_rate_exponent(pts), c.slope, c.tol) << c.g;
  }
}

TEST(ExpectedSquare, EqualsT2OverQOnRandomDraws) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> hurst(0.05, 0.95);
  std::uniform_int_distribution<int> order(1, 4);
  std::uniform_int_distribution<std::size_t> size(2, 300);
  for (int k = 0; k < 50; ++k) {
    const HurstExponent a(hurst(rng)), b(hurst(rng));
    const ChaosOrder q(order(rng));
    const std::size_t n = size(rng), m = size(rng);
    const double ev2 = expected_square(a, b, q, n, m).value;
    const double t2 = t2_exact(a, b, q, n, m).value;
    EXPECT_NEAR(ev2, t2 / q.value(), 1e-12 * std::max(1.0, ev2));
    const double h = kernel_inner_product(a, b, q, {n, m, n, m}).value;
    EXPECT_NEAR(factorial(q.value()) * h, ev2, 1e-12 * std::max(1.0, ev2));
  }
}

TEST(ExpectedSquare, BrownianIsOne) {
  for (std::size_t n : {1, 3, 64, 500}) EXPECT_NEAR(expected_square(kBrown, kBrown, q2, n, 2 * n).value, 1.0, 1e-12);
}

TEST(KernelInnerProduct, CrossGridPathsMatchIntervalOracle) {
  // nested (4 vs 12, 8 vs 2) and non-nested (3 vs 5) grids
  const double a = 0.85, b = 0.4;
  const int q = 2;
  const GridPair cases[] = {{4, 8, 12, 2}, {3, 6, 5, 6}, {7, 7, 7, 7}};
  for (const GridPair& g : cases) {
    const double pa = phi(HurstExponent(a), HurstExponent(b), ChaosOrder(q), g.n, g.m);
    const double pb = phi(HurstExponent(a), HurstExponent(b), ChaosOrder(q), g.n2, g.m2);
    const long double sa = oracle::grid_sum(a, q, g.n, g.n - 1, g.n2, g.n2 - 1);
    const long double sb = oracle::grid_sum(b, q, g.m, g.m - 1, g.m2, g.m2 - 1);
    const double ref = static_cast<double>(pa * pb / 4 * sa * sb);
    EXPECT_NEAR(kernel_inner_product(HurstExponent(a), HurstExponent(b), ChaosOrder(q), g).value, ref, 1e-12 * std::fabs(ref));
  }
}

TEST(KernelInnerProduct, NoncentralLimitConstant) {
  const HurstExponent g(0.9);
  const double norm = kernel_inner_product(g, g, q2, {512, 512, 512, 512}).value;
  EXPECT_NEAR(2 * norm, 1.0, 0.02);
  EXPECT_NEAR(norm, 0.5, 0.01);
}

TEST(KernelInnerProduct, DyadicDistancesStrictlyDecrease) {
  const HurstExponent g(0.9);
  double prev = INFINITY;
  for (std::size_t n : {64, 128, 256}) {
    const double d = kernel_distance_squared(g, g, q2, {n, n, 2 * n, 2 * n});
    EXPECT_GT(d, 0.0);
    EXPECT_LT(d, prev) << n;
    prev = d;
  }
}

TEST(PartialSumCovariance, CornerIsExpectedSquareAndMatchesOracle) {
  const HurstExponent a(0.9), b(0.8);
  const std::size_t n = 20, m = 12;
  EXPECT_NEAR(partial_sum_covariance(a, b, q2, n, m, {1, 1}, {1, 1}), expected_square(a, b, q2, n, m).value, 1e-12);
  const Point p1{0.5, 0.3}, p2{0.8, 0.9};
  const auto li = [](std::size_t len, double t) { return static_cast<std::size_t>(std::floor((len - 1) * t)); };
  const double ph = phi(a, b, q2, n, m);
  const long double ref = ph * ph / 2 * oracle::grid_sum(0.9, 2, n, li(n, p1.s), n, li(n, p2.s)) *
                          oracle::grid_sum(0.8, 2, m, li(m, p1.t), m, li(m, p2.t));
  EXPECT_NEAR(partial_sum_covariance(a, b, q2, n, m, p1, p2), static_cast<double>(ref), 1e-12);
}

TEST(QuadrupleSum, SingleCellIsOne) {
  for (int p = 0; p <= 1; ++p)
    EXPECT_NEAR(quadruple_sum(HurstExponent(0.7), ChaosOrder(3), p, 1, 2 - p - 1, 2 - p - 1, 1, 1).value, 1.0, 1e-15);
}

TEST(QuadrupleSum, BrownianDeltaStructure) {
  // x_ij = delta_ij / N: the two x^{p+1} factors force i = i', k = k'; any
  // remaining positive power forces i = k.
  for (std::size_t n : {1, 2, 5, 9}) {
    const double nd = double(n);
    for (int q : {2, 3}) {
      for (int p = 0; p <= q - 2; ++p) {
        const int k = q - 1 - p;
        for (int a = 0; a <= k; ++a) {
          const double got = quadruple_sum(kBrown, ChaosOrder(q), p, a, k - a, k - a, a, n).value;
          EXPECT_NEAR(got, std::pow(nd, 1 - 2.0 * q), 1e-15) << n << q << p << a;
        }
      }
    }
  }
}

TEST(QuadrupleSum, MatchesNaiveLoops) {
  const double g = 0.7;
  const int q = 3;
  const std::size_t n = 6;
  auto x = [&](std::size_t i, std::size_t j) {
    return oracle::increment_cov(g, (long double)i / n, (long double)(i + 1) / n, (long double)j / n, (long double)(j + 1) / n);
  };
  const int p = 0, a = 2, b = 0, c = 1, d = 1;
  long double ref = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t i2 = 0; i2 < n; ++i2)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t k2 = 0; k2 < n; ++k2)
          ref += std::pow(x(i, k), a) * std::pow(x(i, k2), b) * std::pow(x(i2, k), c) * std::pow(x(i2, k2), d) *
                 std::pow(x(i, i2), p + 1) * std::pow(x(k, k2), p + 1);
  EXPECT_NEAR(quadruple_sum(HurstExponent(g), ChaosOrder(q), p, a, b, c, d, n).value, static_cast<double>(ref),
              1e-12 * std::fabs(static_cast<double>(ref)));
}

TEST(QuadrupleSum, ScaledDecayExponent) {
  // the three exponents bound every (a,b,c,d) pattern; with a=c the k2 sum of r telescopes
  // to edge terms and the pattern decays like N^{2g-2}, while a=d attains the -1 term
  const double g = 0.3;
  const double dominant = std::max({-1.0, 2 * g - 2, 2 * g * 2 - 2 * 2 + 1});
  auto slope = [&](int a, int b, int c, int d) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n : {8, 16, 32, 64}) {
      const double v = quadruple_sum(HurstExponent(g), q2, 0, a, b, c, d, n).value;
      pts.emplace_back(double(n), std::pow(double(n), 4 * 2 * g - 2) * v);
    }
    return fit_rate_exponent(pts);
  };
  const double s1010 = slope(1, 0, 1, 0);
  EXPECT_LE(s1010, dominant + 0.15);
  EXPECT_NEAR(s1010, 2 * g - 2, 0.05);
  EXPECT_NEAR(slope(1, 0, 0, 1), dominant, 0.05);
}

TEST(QuadrupleSum, Preconditions) {
  const HurstExponent g(0.6);
  EXPECT_THROW(quadruple_sum(g, ChaosOrder(1), 0, 0, 0, 0, 0, 4), PreconditionError);
  EXPECT_THROW(quadruple_sum(g, q2, 1, 0, 0, 0, 0, 4), PreconditionError);
  EXPECT_THROW(quadruple_sum(g, q2, 0, 1, 1, 1, 0, 4), PreconditionError);
  EXPECT_THROW(quadruple_sum(g, q2, 0, 1, 0, 1, 0, 65), PreconditionError);
  EXPECT_NO_THROW(quadruple_sum(g, q2, 0, 1, 0, 1, 0, 65, 128));
}

TEST(T1SecondMoment, BrownianSecondChaos) {
  // ||DV~||^2 = (2/NM) sum X^2, variance 8/(NM)
  for (std::size_t n : {2, 4, 8}) EXPECT_NEAR(t1_second_moment(kBrown, kBrown, q2, n, n).value * n * n, 8.0, 1e-10);
  for (std::size_t n : {2, 3, 4}) {
    const double ref = static_cast<double>(oracle::t1_variance_wick(0.5, 0.5, 2, n, n, phi(kBrown, kBrown, q2, n, n)));
    EXPECT_NEAR(t1_second_moment(kBrown, kBrown, q2, n, n).value, ref, 1e-10);
  }
}

TEST(T1SecondMoment, FactoredMatchesDirectEightFoldSum) {
  for (std::size_t n : {2, 3}) {
    for (int q : {2, 3, 4}) {
      const HurstExponent a(0.8), b(0.35);
      const double f = t1_second_moment(a, b, ChaosOrder(q), n, n).value;
      const double d = t1_second_moment_direct(a, b, ChaosOrder(q), n, n).value;
      EXPECT_NEAR(f, d, 1e-10 * std::max(1.0, std::fabs(d))) << n << " " << q;
    }
  }
}

TEST(T1SecondMoment, MatchesDiagramFormulaOracle) {
  struct Case {
    double a, b;
    int q;
    std::size_t n, m;
  };
  for (const Case& c : {Case{0.5, 0.5, 2, 3, 3}, Case{0.8, 0.35, 2, 4, 4}, Case{0.9, 0.9, 3, 3, 4},
                        Case{0.2, 0.6, 4, 2, 3}, Case{0.95, 0.55, 3, 4, 2}}) {
    const HurstExponent a(c.a), b(c.b);
    const ChaosOrder q(c.q);
    const double ph = phi(a, b, q, c.n, c.m);
    const double ref = static_cast<double>(oracle::t1_variance_wick(c.a, c.b, c.q, c.n, c.m, ph));
    EXPECT_NEAR(t1_second_moment(a, b, q, c.n, c.m).value, ref, 1e-10 * std::max(1.0, ref))
        << c.a << " " << c.b << " " << c.q;
    if (c.q == 2) EXPECT_NEAR(oracle::t1_variance_trace(c.a, c.b, c.n, c.m, ph), ref, 1e-10 * std::max(1.0, ref));
  }
}

TEST(T1SecondMoment, CentralRegimeSeparatesFromHermiteRegime) {
  auto ratio = [](double g) {
    const HurstExponent h(g);
    const double t2 = t2_exact(h, h, q2, 32, 32).value;
    return t1_second_moment(h, h, q2, 32, 32).value / (t2 * t2);
  };
  EXPECT_LT(ratio(0.3), ratio(0.9));
}

TEST(T1SecondMoment, FirstChaosVanishesAndCapEnforced) {
  EXPECT_EQ(t1_second_moment(HurstExponent(0.3), HurstExponent(0.6), ChaosOrder(1), 500, 500).value, 0.0);
  EXPECT_THROW(t1_second_moment(HurstExponent(0.3), HurstExponent(0.6), q2, 100, 10), PreconditionError);
  EXPECT_THROW(t1_second_moment_direct(HurstExponent(0.3), HurstExponent(0.6), q2, 5, 5), PreconditionError);
}
