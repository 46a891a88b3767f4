#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "hermvar/exact_moments.hpp"
#include "hermvar/normalization.hpp"
#include "oracles.hpp"

using namespace hermvar;

namespace {
Regime classify(double a, double b, int q) { return classify_regime(HurstExponent(a), HurstExponent(b), ChaosOrder(q)); }
}  // namespace

TEST(ClassifyRegime, Examples) {
  EXPECT_EQ(classify(0.3, 0.4, 2), (Regime{1, false, LimitKind::gaussian}));
  EXPECT_EQ(classify(0.9, 0.8, 2), (Regime{6, false, LimitKind::hermite}));
  EXPECT_EQ(classify(0.9, 0.3, 2), (Regime{4, true, LimitKind::gaussian}));
  EXPECT_EQ(classify(0.3, 0.9, 2), (Regime{4, false, LimitKind::gaussian}));
}

TEST(ClassifyRegime, ThresholdCases) {
  EXPECT_DOUBLE_EQ(regime_threshold(ChaosOrder(2)), 0.75);
  EXPECT_EQ(classify(0.3, 0.75, 2).case_id, 2);
  EXPECT_TRUE(classify(0.75, 0.3, 2).axes_swapped);
  EXPECT_EQ(classify(0.75, 0.75, 2).case_id, 3);
  EXPECT_EQ(classify(0.75, 0.9, 2).case_id, 5);
  EXPECT_EQ(classify(0.9, 0.75, 2), (Regime{5, true, LimitKind::gaussian}));
  EXPECT_EQ(classify(0.8, 0.8, 3).case_id, 1);  // threshold 5/6
  EXPECT_THROW(classify(0.3, 0.3, 1), PreconditionError);
}

TEST(ClassifyRegime, SwapIsASymmetryOfTheSecondMoment) {
  const ChaosOrder q(2);
  const HurstExponent a(0.9), b(0.3);
  const double lhs = expected_square(a, b, q, 40, 24).value;
  const double rhs = expected_square(b, a, q, 24, 40).value;
  EXPECT_NEAR(lhs, rhs, 1e-13);
}

TEST(SGamma, BrownianIsExactlyOne) {
  for (int q : {2, 3, 5}) {
    const LimitConstant c = s_gamma(HurstExponent(0.5), ChaosOrder(q), 1e-12);
    EXPECT_EQ(c.value, 1.0);
    EXPECT_EQ(c.abs_error_bound, 0.0);
  }
  // q = 1 puts 1/2 on the threshold
  EXPECT_THROW(s_gamma(HurstExponent(0.5), ChaosOrder(1), 1e-12), PreconditionError);
}

TEST(SGamma, MatchesLongTruncationOracle) {
  // plain truncation at 1e6 leaves a tail below 2e-13 for gamma = 0.3, q = 2
  const long double ref = oracle::s_truncated(0.3L, 2, 1000000);
  const LimitConstant c = s_gamma(HurstExponent(0.3), ChaosOrder(2), 1e-12);
  EXPECT_NEAR(c.value, static_cast<double>(ref), 1e-12);
  EXPECT_LE(c.abs_error_bound, 1e-12);
  EXPECT_NEAR(c.value, 1.1252, 1e-3);
}

TEST(SGamma, OddPowerOfNegativeCorrelationsBelowOne) {
  const LimitConstant c = s_gamma(HurstExponent(0.3), ChaosOrder(3), 1e-12);
  EXPECT_LT(c.value, 1.0);
  EXPECT_NEAR(c.value, static_cast<double>(oracle::s_truncated(0.3L, 3, 100000)), 1e-12);
}

TEST(SGamma, NearThresholdValuesWithinReportedBound) {
  // 40-digit references: direct sum to 1000 plus a 12-term tail of Hurwitz zeta values
  struct Case {
    double g;
    int q;
    double ref;
  };
  for (const Case& c : {Case{0.7, 2, 1.9286298381837957679}, Case{0.74, 2, 7.5209448305278861730},
                        Case{0.1, 4, 1.0656523192525508310}, Case{0.3, 2, 1.1251955053613130132}}) {
    const LimitConstant s = s_gamma(HurstExponent(c.g), ChaosOrder(c.q), 1e-12);
    EXPECT_LE(s.abs_error_bound, 1e-12);
    EXPECT_LE(std::fabs(s.value - c.ref), s.abs_error_bound + 1e-16 * c.ref) << c.g << " " << c.q;
  }
}

TEST(SGamma, Preconditions) {
  EXPECT_THROW(s_gamma(HurstExponent(0.75), ChaosOrder(2), 1e-12), PreconditionError);
  EXPECT_THROW(s_gamma(HurstExponent(0.9), ChaosOrder(2), 1e-12), PreconditionError);
  EXPECT_THROW(s_gamma(HurstExponent(0.3), ChaosOrder(2), 0.0), PreconditionError);
  EXPECT_THROW(s_gamma(HurstExponent(0.3), ChaosOrder(2), 1e-30), PreconditionError);
}

TEST(Iota, Values) {
  EXPECT_DOUBLE_EQ(iota(ChaosOrder(2)).value, 0.28125);
  EXPECT_NEAR(iota(ChaosOrder(3)).value, 2 * std::pow(10.0 / 18.0, 3), 1e-15);
  EXPECT_NEAR(iota(ChaosOrder(3)).value, 0.342936, 1e-6);
  EXPECT_THROW(iota(ChaosOrder(1)), PreconditionError);
}

TEST(Iota, LogCorrectedGridSumConverges) {
  // At the threshold N^{2q-2} S_N = iota log N + c + o(1), so the dyadic
  // difference quotient isolates iota.
  for (int qv : {2, 3}) {
    const ChaosOrder q(qv);
    const HurstExponent g(regime_threshold(q));
    const std::size_t n = std::size_t{1} << 13;
    auto f = [&](std::size_t k) {
      return std::pow(double(k), 2.0 * qv - 2) * grid_covariance_sum(g, q, k).value;
    };
    const double est = (f(2 * n) - f(n)) / std::log(2.0);
    EXPECT_NEAR(est / iota(q).value, 1.0, 0.05) << "q=" << qv;
  }
}

TEST(Kappa, Values) {
  EXPECT_NEAR(kappa(HurstExponent(0.9), ChaosOrder(2)).value, 1.08, 1e-14);
  EXPECT_NEAR(kappa(HurstExponent(0.8), ChaosOrder(2)).value, 1.92, 1e-14);
  EXPECT_THROW(kappa(HurstExponent(0.75), ChaosOrder(2)), PreconditionError);
  EXPECT_THROW(kappa(HurstExponent(0.5), ChaosOrder(2)), PreconditionError);
}

TEST(Kappa, IsTheLimitOfTheScaledGridSum) {
  const HurstExponent g(0.9);
  const ChaosOrder q(2);
  const double n = 4096;
  const double scaled = std::pow(n, 2.0 * 2 - 2) * grid_covariance_sum(g, q, 4096).value;
  EXPECT_NEAR(scaled / kappa(g, q).value, 1.0, 0.02);
}

TEST(Phi, Examples) {
  const ChaosOrder q(2);
  EXPECT_NEAR(phi(HurstExponent(0.9), HurstExponent(0.9), q, 10, 10), std::sqrt(2.0) / 1.08 * 100, 1e-10);
  EXPECT_NEAR(phi(HurstExponent(0.9), HurstExponent(0.9), q, 10, 10), 130.9457, 1e-4);
  for (double n : {1.0, 7.0, 64.0})
    EXPECT_NEAR(phi(HurstExponent(0.5), HurstExponent(0.5), q, n, 2 * n), std::sqrt(2.0 * n * 2 * n), 1e-12 * n);
  const double e = std::exp(1.0);
  const double io = iota(q).value;
  EXPECT_NEAR(phi(HurstExponent(0.75), HurstExponent(0.75), q, e, e), std::sqrt(2.0 / (io * io)) * e * e, 1e-12);
  EXPECT_EQ(phi(HurstExponent(0.2), HurstExponent(0.9), ChaosOrder(1), 50, 70), 1.0);
  EXPECT_THROW(phi(HurstExponent(0.75), HurstExponent(0.3), q, 1, 10), PreconditionError);
}

TEST(Phi, MixedCasesNormaliseToUnitSecondMoment) {
  for (const auto& [a, b] : {std::pair{0.3, 0.4}, std::pair{0.3, 0.9}, std::pair{0.9, 0.2}}) {
    const double ev2 = expected_square(HurstExponent(a), HurstExponent(b), ChaosOrder(2), 2048, 2048).value;
    EXPECT_NEAR(ev2, 1.0, 0.01) << a << " " << b;
  }
}

TEST(Phi, ThresholdCasesApproachOneLikeInverseLog) {
  // one axis on the threshold: E[tildeV^2] = 1 + c / log N + o(1 / log N), c > 0
  for (const auto& [a, b] : {std::pair{0.6, 0.75}, std::pair{0.75, 0.9}}) {
    std::vector<double> c;
    for (double n : {1024.0, 4096.0, 16384.0}) {
      const double ev2 = expected_square(HurstExponent(a), HurstExponent(b), ChaosOrder(2), n, n).value;
      c.push_back((ev2 - 1.0) * std::log(n));
    }
    EXPECT_GT(c[0], 0.0);
    EXPECT_NEAR(c[1] / c[0], 1.0, 0.01) << a << " " << b;
    EXPECT_NEAR(c[2] / c[1], 1.0, 0.01) << a << " " << b;
  }
}

TEST(BerryEsseenRate, Examples) {
  const ChaosOrder q(2);
  const double v = berry_esseen_rate(HurstExponent(0.3), HurstExponent(0.3), q, 100, 100);
  EXPECT_NEAR(v, std::sqrt(2 * (1e-2 + std::pow(100.0, -1.4) + std::pow(100.0, -1.8))), 1e-15);
  EXPECT_NEAR(v, 0.1539, 1e-4);
  const double e100 = std::exp(100.0);
  EXPECT_NEAR(berry_esseen_rate(HurstExponent(0.75), HurstExponent(0.75), q, e100, e100), std::sqrt(0.02), 1e-12);
  EXPECT_LT(berry_esseen_rate(HurstExponent(0.3), HurstExponent(0.3), q, 1e6, 1e6), v);
  EXPECT_NEAR(berry_esseen_rate(HurstExponent(0.3), HurstExponent(0.9), q, 64, 64),
              std::sqrt(1.0 / 64 + std::pow(64.0, -1.4) + std::pow(64.0, -1.8) + std::pow(64.0, 3 - 3.6)), 1e-15);
  EXPECT_THROW(berry_esseen_rate(HurstExponent(0.9), HurstExponent(0.8), q, 10, 10), PreconditionError);
}
