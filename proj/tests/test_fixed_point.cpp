#include <cmath>

#include <gtest/gtest.h>

#include "seqtest/fixed_point.hpp"

using namespace seqtest;

TEST(FixedPoint, KnownRoots) {
  EXPECT_NEAR(*solve_largest_root({10.0, 1.0}), 12.527963201982175, 1e-9);
  EXPECT_NEAR(*solve_largest_root({100.0, 2.0}), 109.38983595702959, 1e-9);
  EXPECT_NEAR(*solve_largest_root({23.025850929940457, 5.0}), 41.67540688991254, 1e-9);
  EXPECT_NEAR(*solve_largest_root({10.0, 1e-9}), 10.0 + 1e-9 * std::log(10.0), 1e-12);
}

TEST(FixedPoint, RootSatisfiesEquationAndBound) {
  for (double K = 5.0; K <= 500.0; K *= 1.7) {
    for (double L = 0.01; L <= 10.0; L *= 2.3) {
      const FixedPointQuery q{K, L};
      const auto y = solve_largest_root(q);
      if (!y) {
        EXPECT_FALSE(fixed_point_applicable(q));
        continue;
      }
      EXPECT_NEAR(*y, K + L * std::log(*y), 1e-9 * *y);
      EXPECT_GE(*y, K);
      EXPECT_LE(*y, fixed_point_upper_bound(q) + 1e-9);
      // Largest root: the map y -> K + L log y - y is negative beyond it.
      EXPECT_LT(K + L * std::log(*y * 1.01) - *y * 1.01, 0.0);
    }
  }
}

TEST(FixedPoint, RejectsOutsideApplicability) {
  EXPECT_FALSE(solve_largest_root({1.0, 5.0}));
  EXPECT_FALSE(solve_largest_root({-1.0, 1.0}));
  EXPECT_FALSE(solve_largest_root({10.0, 0.0}));
}
