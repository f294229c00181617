#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "seqtest/function_classes.hpp"

using namespace seqtest;

TEST(BetClass, RangeAndValidation) {
  const BetClass cls(0.2, 0.5);
  EXPECT_DOUBLE_EQ(cls.lower(), -1.6);
  EXPECT_DOUBLE_EQ(cls.upper(), 1.6);
  EXPECT_THROW(BetClass(0.0, 0.5), ConfigError);
  EXPECT_THROW(BetClass(0.2, 1.0), ConfigError);
  EXPECT_THROW(LogRatioClass(1.0, 3), ConfigError);
}

TEST(BetClass, WealthFactorsStayAboveEpsilon) {
  std::mt19937_64 eng(1);
  for (int t = 0; t < 2000; ++t) {
    const double eps = 0.01 + 0.98 * uniform01(eng);
    const double mu0 = 0.01 + 0.98 * uniform01(eng);
    const BetClass cls(eps, mu0);
    const double phi = cls.lower() + (cls.upper() - cls.lower()) * uniform01(eng);
    for (double x : {0.0, 1.0}) EXPECT_GE(1.0 + phi * (x - mu0), eps - 1e-12);
  }
}

TEST(Evaluate, KnownValues) {
  const BetFunction bet{0.8, 0.5};
  EXPECT_NEAR(evaluate(bet, 1.0), std::log(1.4), 1e-15);
  EXPECT_NEAR(evaluate(bet, 0.0), std::log(0.6), 1e-15);
  const LogRatioFunction ones{{1.0, 1.0, 1.0}};
  for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(evaluate(ones, x), 0.0);
  EXPECT_THROW(evaluate(ones, 3), DomainError);
  EXPECT_THROW(evaluate(bet, 1.5), DomainError);
  EXPECT_THROW(evaluate(TestFunction{bet}, Observation{std::size_t{1}}), DomainError);
}

TEST(Evaluate, LogRatioMembersAreBounded) {
  std::mt19937_64 eng(2);
  const LogRatioClass cls(0.1, 4);
  for (int t = 0; t < 500; ++t) {
    LogRatioFunction f;
    for (int x = 0; x < 4; ++x) f.phi.push_back(std::exp((2 * uniform01(eng) - 1) * cls.value_bound()));
    for (std::size_t x = 0; x < 4; ++x) EXPECT_LE(std::abs(evaluate(f, x)), cls.value_bound() + 1e-12);
  }
}

TEST(Psi0Of, ClosedForms) {
  const ConvexHullNull singleton({Pmf({0.5, 0.5})});
  EXPECT_NEAR(psi0_of(LogRatioFunction{{2.0, 0.5}}, singleton), std::log(1.25), 1e-15);
  EXPECT_EQ(psi0_of(LogRatioFunction{{1.0, 1.0}}, singleton), 0.0);
  EXPECT_EQ(psi0_of(TestFunction{BetFunction{1.2, 0.5}}, NullModel{BoundedMeanNull(0.5)}), 0.0);
  EXPECT_THROW(psi0_of(TestFunction{BetFunction{1.2, 0.5}}, NullModel{singleton}), ConfigError);
}

TEST(Psi0Of, BetLogMgfIsZeroUnderMeanMu0Laws) {
  // Two-atom laws with mean mu0: E[1 + phi (X - mu0)] = 1 exactly.
  std::mt19937_64 eng(3);
  const double mu0 = 0.35;
  const BetClass cls(0.1, mu0);
  double worst = -kInf;
  for (int t = 0; t < 50; ++t) {
    const double a = mu0 * uniform01(eng);
    const double b = mu0 + (1 - mu0) * uniform01(eng);
    const double wa = (b - mu0) / (b - a);
    const double phi = cls.lower() + (cls.upper() - cls.lower()) * uniform01(eng);
    const double m = wa * (1 + phi * (a - mu0)) + (1 - wa) * (1 + phi * (b - mu0));
    worst = std::max(worst, std::log(m));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(ErmBet, KnownSolutions) {
  const BetClass cls(0.2, 0.5);
  EXPECT_NEAR(erm_bet(cls, std::vector<double>{1, 1, 0}).phi, 2.0 / 3.0, 1e-9);
  EXPECT_DOUBLE_EQ(erm_bet(cls, std::vector<double>{1, 1, 1}).phi, 1.6);
  EXPECT_NEAR(erm_bet(cls, std::vector<double>{0.5, 0.5}).phi, 0.0, 1e-9);
  EXPECT_THROW(erm_bet(cls, std::vector<double>{}), ConfigError);
}

TEST(ErmBet, DominatesRandomBets) {
  std::mt19937_64 eng(4);
  const BetClass cls(0.1, 0.4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xs(5 + trial);
    for (auto& x : xs) x = uniform01(eng);
    WeightedAtoms data;
    for (double x : xs) data.add(x);
    const double best = bet_objective(data, cls.mu0(), erm_bet(cls, xs).phi);
    for (int t = 0; t < 200; ++t) {
      const double phi = cls.lower() + (cls.upper() - cls.lower()) * uniform01(eng);
      EXPECT_GE(best, bet_objective(data, cls.mu0(), phi) - 1e-10);
    }
  }
}

TEST(ErmLogRatio, SingletonCornerSolution) {
  const LogRatioClass cls(0.5, 2);
  const ConvexHullNull null({Pmf({0.5, 0.5})});
  const auto fit = erm_log_ratio(cls, null, std::vector<std::size_t>{10, 0});
  EXPECT_NEAR(fit.function.phi[0], 2.0, 1e-9);
  EXPECT_NEAR(fit.function.phi[1], 0.5, 1e-9);
  EXPECT_NEAR(fit.solution.value, 0.4700036292457355, 1e-8);
}

TEST(ErmLogRatio, VertexProportionalCountsGiveZeroValue) {
  const ConvexHullNull null({Pmf({0.5, 0.3, 0.2}), Pmf({0.2, 0.3, 0.5})});
  const auto fit = erm_log_ratio(LogRatioClass(0.1, 3), null, std::vector<std::size_t>{500, 300, 200});
  EXPECT_NEAR(fit.solution.value, 0.0, 2e-8);
  // phi = 1 is always feasible with objective 0, so the optimum is never negative.
  EXPECT_GE(fit.solution.value, -1e-12);
}

TEST(ErmLogRatio, DimensionChecks) {
  const ConvexHullNull null({Pmf({0.5, 0.3, 0.2})});
  EXPECT_THROW(erm_log_ratio(LogRatioClass(0.1, 2), null, std::vector<std::size_t>{1, 1}), DimensionError);
}
