#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "seqtest/null_models.hpp"

using namespace seqtest;

namespace {

ConvexHullNull two_point_hull() { return ConvexHullNull({Pmf({0.8, 0.2}), Pmf({0.2, 0.8})}); }

ConvexHullNull three_vertex_hull() {
  return ConvexHullNull({Pmf({0.6, 0.2, 0.1, 0.1}), Pmf({0.1, 0.5, 0.2, 0.2}), Pmf({0.2, 0.2, 0.3, 0.3})});
}

// Brute-force hull maximum likelihood over a weight grid.
double grid_mle(const ConvexHullNull& null, const std::vector<double>& counts, int steps) {
  const std::size_t K = null.num_vertices();
  double best = -kInf;
  auto eval = [&](const std::vector<double>& w) {
    const Pmf q = null.point(w);
    double ll = 0.0;
    for (std::size_t x = 0; x < counts.size(); ++x) {
      if (counts[x] > 0.0) ll += counts[x] * std::log(q[x]);
    }
    best = std::max(best, ll);
  };
  if (K == 2) {
    for (int i = 0; i <= steps; ++i) {
      const double a = static_cast<double>(i) / steps;
      eval({a, 1.0 - a});
    }
  } else {
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; i + j <= steps; ++j) {
        const double a = static_cast<double>(i) / steps, b = static_cast<double>(j) / steps;
        eval({a, b, 1.0 - a - b});
      }
    }
  }
  return best;
}

// Bernoulli KL(p || q).
double bern_kl(double p, double q) { return p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q)); }

}  // namespace

TEST(ConvexHullNull, Validation) {
  EXPECT_THROW(ConvexHullNull(std::vector<Pmf>{}), ConfigError);
  EXPECT_THROW(ConvexHullNull({Pmf({0.5, 0.5}), Pmf({0.2, 0.3, 0.5})}), DimensionError);
  EXPECT_THROW(BoundedMeanNull(1.0), ConfigError);
  EXPECT_THROW(BoundedMeanNull(0.0), ConfigError);
}

TEST(Psi0, VertexMaximum) {
  const std::vector<double> f{1.0, 0.0};
  EXPECT_NEAR(log_mgf(Pmf({0.8, 0.2}), f), 0.8648397251631905, 1e-14);
  EXPECT_NEAR(log_mgf(Pmf({0.2, 0.8}), f), 0.29539452912034764, 1e-14);
  EXPECT_NEAR(psi0_hull(two_point_hull(), f), 0.8648397251631905, 1e-14);
}

TEST(Psi0, DominatesInteriorPointsAndIsShiftEquivariant) {
  const ConvexHullNull null = three_vertex_hull();
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nrm;
  std::gamma_distribution<double> g(1.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> f(4);
    for (auto& v : f) v = nrm(eng);
    const double psi = psi0_hull(null, f);
    std::vector<double> w(3);
    double s = 0.0;
    for (auto& v : w) s += (v = g(eng));
    for (auto& v : w) v /= s;
    EXPECT_LE(log_mgf(null.point(w), f), psi + 1e-12);
    const double c = nrm(eng);
    std::vector<double> shifted(f);
    for (auto& v : shifted) v += c;
    EXPECT_NEAR(psi0_hull(null, shifted), psi + c, 1e-12);
  }
}

TEST(NullMle, SingleVertexClosedForm) {
  const ConvexHullNull null({Pmf({0.8, 0.2})});
  const std::vector<std::size_t> counts{7, 3};
  EXPECT_NEAR(null_mle_loglik(null, counts).loglik, -6.390318596501769, 1e-12);
}

TEST(NullMle, EmpiricalInsideHull) {
  const std::vector<std::size_t> counts{7, 3};
  const auto fit = null_mle_loglik(two_point_hull(), counts);
  EXPECT_NEAR(fit.loglik, 7 * std::log(0.7) + 3 * std::log(0.3), 1e-12);
  EXPECT_NEAR(fit.weights[0], 5.0 / 6.0, 1e-9);
}

TEST(NullMle, ClampsToBoundaryVertex) {
  const std::vector<std::size_t> counts{10, 0};
  const auto fit = null_mle_loglik(two_point_hull(), counts);
  EXPECT_NEAR(fit.loglik, 10 * std::log(0.8), 1e-14);
  EXPECT_DOUBLE_EQ(fit.weights[0], 1.0);
}

TEST(NullMle, MatchesGridOracle) {
  std::mt19937_64 eng(11);
  std::uniform_int_distribution<int> cnt(0, 40);
  const ConvexHullNull two({Pmf({0.5, 0.3, 0.2}), Pmf({0.2, 0.3, 0.5})});
  const ConvexHullNull three = three_vertex_hull();
  for (int t = 0; t < 40; ++t) {
    std::vector<double> c2{double(cnt(eng)), double(cnt(eng)), double(cnt(eng) + 1)};
    const double ours2 = maximize_mixture_loglik(two, c2).loglik;
    const double grid2 = grid_mle(two, c2, 20000);
    EXPECT_GE(ours2, grid2 - 1e-9);
    EXPECT_LE(ours2, grid2 + 1e-6);

    std::vector<double> c3{double(cnt(eng)), double(cnt(eng)), double(cnt(eng)), double(cnt(eng) + 1)};
    const double ours3 = maximize_mixture_loglik(three, c3).loglik;
    const double grid3 = grid_mle(three, c3, 400);
    EXPECT_GE(ours3, grid3 - 1e-9);
    EXPECT_LE(ours3, grid3 + 5e-3);
  }
}

TEST(NullMle, DominatesEveryVertexAndRandomHullPoint) {
  const ConvexHullNull null = three_vertex_hull();
  std::mt19937_64 eng(5);
  std::uniform_int_distribution<int> cnt(0, 30);
  std::gamma_distribution<double> g(0.5, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> c{double(cnt(eng)), double(cnt(eng)), double(cnt(eng)), double(cnt(eng) + 1)};
    const double mle = maximize_mixture_loglik(null, c).loglik;
    for (const auto& v : null.vertices()) EXPECT_GE(mle, weighted_loglik(v, c) - 1e-12);
    std::vector<double> w(3);
    double s = 0.0;
    for (auto& v : w) s += (v = g(eng) + 1e-12);
    for (auto& v : w) v /= s;
    EXPECT_GE(mle, weighted_loglik(null.point(w), c) - 1e-12);
  }
}

TEST(NullMle, UncoveredSymbolGivesMinusInfinity) {
  const ConvexHullNull null({Pmf({0.5, 0.5, 0.0}), Pmf({0.2, 0.8, 0.0})});
  const std::vector<std::size_t> counts{1, 1, 1};
  EXPECT_EQ(null_mle_loglik(null, counts).loglik, -kInf);
  const std::vector<std::size_t> none{0, 0, 0};
  EXPECT_THROW(null_mle_loglik(null, none), ConfigError);
}

TEST(KlInfHull, SingleVertexIsPlainKl) {
  const ConvexHullNull null({Pmf::uniform(3)});
  const auto res = kl_inf_hull(Pmf({0.6, 0.3, 0.1}), null);
  EXPECT_NEAR(res.gamma_star, 0.2006665638113299, 1e-12);
}

TEST(KlInfHull, ZeroInsideAndInfiniteWithoutSupport) {
  EXPECT_NEAR(kl_inf_hull(Pmf({0.5, 0.5}), two_point_hull()).gamma_star, 0.0, 1e-12);
  const ConvexHullNull null({Pmf({1.0, 0.0}), Pmf({0.9, 0.1})});
  EXPECT_NEAR(kl_inf_hull(Pmf({0.9, 0.1}), null).gamma_star, 0.0, 1e-12);
  const ConvexHullNull degenerate({Pmf({1.0, 0.0, 0.0}), Pmf({0.0, 1.0, 0.0})});
  EXPECT_EQ(kl_inf_hull(Pmf({0.3, 0.3, 0.4}), degenerate).gamma_star, kInf);
}

TEST(KlInfHull, BoundaryProjection) {
  // (0.95, 0.05) lies outside [0.2, 0.8]; the projection is the vertex (0.8, 0.2).
  EXPECT_NEAR(kl_inf_hull(Pmf({0.95, 0.05}), two_point_hull()).gamma_star, bern_kl(0.95, 0.8), 1e-12);
}

TEST(KlInfBoundedMean, BernoulliMatchesKl) {
  const BoundedMeanNull null(0.5);
  for (double p : {0.55, 0.6, 0.7, 0.9}) {
    const auto res = kl_inf_bounded_mean(BoundedDistSpec{Bernoulli{p}}, null);
    EXPECT_NEAR(res.gamma_star, bern_kl(p, 0.5), 1e-10) << "p=" << p;
    // Projection is Bernoulli(mu0).
    EXPECT_NEAR(res.minimizer[0] + res.minimizer[1], 1.0, 1e-8);
  }
  EXPECT_NEAR(kl_inf_bounded_mean(BoundedDistSpec{Bernoulli{0.7}}, null).gamma_star, 0.08228287850505178, 1e-10);
}

TEST(KlInfBoundedMean, TwoAtomMatchesDenseGrid) {
  const BoundedMeanNull null(0.4);
  const DiscreteDist d{{0.2, 0.9}, {0.5, 0.5}};
  const auto res = kl_inf_bounded_mean(BoundedDistSpec{d}, null);
  double best = -kInf;
  const double lo = -1.0 / 0.6, hi = 1.0 / 0.4;
  const int steps = 2000000;
  for (int i = 0; i <= steps; ++i) {
    const double phi = lo + (hi - lo) * i / steps;
    const double a = 1 + phi * (0.2 - 0.4), b = 1 + phi * (0.9 - 0.4);
    if (a <= 0 || b <= 0) continue;
    best = std::max(best, 0.5 * std::log(a) + 0.5 * std::log(b));
  }
  EXPECT_NEAR(res.gamma_star, best, 1e-9);
  // The projected masses form a pmf with mean mu0.
  double mass = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    mass += res.minimizer[i];
    mean += res.minimizer[i] * d.atoms[i];
  }
  EXPECT_NEAR(mass, 1.0, 1e-6);
  EXPECT_NEAR(mean, 0.4, 1e-6);
}

TEST(KlInfBoundedMean, BoundaryDualMovesMassOffSupport) {
  // The optimal bet sits at phi = 1/mu0; the projection puts the missing mass
  // on x = 0, which the data never visit.
  const auto res = kl_inf_bounded_mean(BoundedDistSpec{DiscreteDist{{0.2, 0.9}, {0.35, 0.65}}}, BoundedMeanNull(0.4));
  EXPECT_NEAR(*res.dual_certificate, 2.5, 1e-9);
  EXPECT_LT(res.minimizer[0] + res.minimizer[1], 1.0);
  EXPECT_NEAR(res.gamma_star, 0.35 * std::log(0.5) + 0.65 * std::log(2.25), 1e-10);
}

TEST(KlInfBoundedMean, ZeroAtTheNullMeanAndRestrictedRange) {
  const BoundedMeanNull null(0.5);
  EXPECT_NEAR(kl_inf_bounded_mean(BoundedDistSpec{DiscreteDist{{0.0, 0.5, 1.0}, {0.25, 0.5, 0.25}}}, null).gamma_star, 0.0, 1e-12);
  const auto full = kl_inf_bounded_mean(BoundedDistSpec{Bernoulli{0.9}}, null).gamma_star;
  const auto restricted = kl_inf_bounded_mean(BoundedDistSpec{Bernoulli{0.9}}, null, std::pair{-1.6, 1.6}).gamma_star;
  EXPECT_LT(restricted, full);
  EXPECT_NEAR(restricted, 0.9 * std::log(1.8) + 0.1 * std::log(0.2), 1e-10);
  EXPECT_THROW(kl_inf_bounded_mean(BoundedDistSpec{BetaDist{2, 2}}, null), ConfigError);
}
