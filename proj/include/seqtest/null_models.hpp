#ifndef SEQTEST_NULL_MODELS_HPP
#define SEQTEST_NULL_MODELS_HPP

// Composite null classes and their three oracles: the worst-case log-MGF
// psi0(f), the null maximum likelihood, and the KL_inf projection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqtest/core_prob.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/scalar_search.hpp"
#include "seqtest/simplex_solver.hpp"

namespace seqtest {

/// Null set given as the convex hull of K vertex pmfs on a common alphabet.
class ConvexHullNull {
 public:
  ConvexHullNull() = default;
  explicit ConvexHullNull(std::vector<Pmf> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.empty()) throw ConfigError("convex hull null needs at least one vertex");
    for (const auto& v : vertices_) {
      if (v.size() != vertices_.front().size()) throw DimensionError("hull vertices differ in alphabet size");
    }
  }

  std::size_t alphabet_size() const { return vertices_.front().size(); }
  std::size_t num_vertices() const { return vertices_.size(); }
  const Pmf& vertex(std::size_t k) const { return vertices_[k]; }
  std::span<const Pmf> vertices() const { return vertices_; }

  Pmf point(std::span<const double> weights) const { return Pmf::mixture(vertices_, weights); }

 private:
  std::vector<Pmf> vertices_;
};

/// All distributions on [0,1] with mean exactly mu0.
struct BoundedMeanNull {
  double mu0 = 0.5;

  BoundedMeanNull() = default;
  explicit BoundedMeanNull(double mean) : mu0(mean) {
    if (!(mean > 0.0 && mean < 1.0)) throw ConfigError("bounded-mean null needs 0 < mu0 < 1");
  }
};

struct KlInfResult {
  double gamma_star = 0.0;
  /// Hull weights for convex-hull nulls; the projected atom masses for the
  /// bounded-mean null.
  std::vector<double> minimizer;
  std::optional<double> dual_certificate;
};

/// log E_q[e^f] for a single pmf q.
inline double log_mgf(const Pmf& q, std::span<const double> f) {
  if (q.size() != f.size()) throw DimensionError("log_mgf: test function and pmf differ in length");
  double top = -kInf;
  for (std::size_t x = 0; x < f.size(); ++x) {
    if (q[x] > 0.0) top = std::max(top, f[x]);
  }
  double acc = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) {
    if (q[x] > 0.0) acc += q[x] * std::exp(f[x] - top);
  }
  return top + std::log(acc);
}

/// sup over the hull of log E_q[e^f]. E_q[e^f] is linear in q, so the
/// supremum is attained at a vertex.
inline double psi0_hull(const ConvexHullNull& null, std::span<const double> f) {
  double best = -kInf;
  for (const auto& v : null.vertices()) best = std::max(best, log_mgf(v, f));
  return best;
}

/// sum_x counts[x] log q[x] with 0 log 0 = 0; -inf if q misses an observed symbol.
inline double weighted_loglik(const Pmf& q, std::span<const double> counts) {
  double acc = 0.0;
  for (std::size_t x = 0; x < counts.size(); ++x) {
    if (counts[x] == 0.0) continue;
    if (q[x] == 0.0) return -kInf;
    acc += counts[x] * std::log(q[x]);
  }
  return acc;
}

struct MixtureFit {
  double loglik = 0.0;
  std::vector<double> weights;
};

namespace detail {

inline double mixture_prob(const ConvexHullNull& null, std::span<const double> w, std::size_t x) {
  double p = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) p += w[k] * null.vertex(k)[x];
  return p;
}

inline double mixture_loglik(const ConvexHullNull& null, std::span<const double> w, std::span<const double> counts) {
  double acc = 0.0;
  for (std::size_t x = 0; x < counts.size(); ++x) {
    if (counts[x] == 0.0) continue;
    const double p = mixture_prob(null, w, x);
    if (p <= 0.0) return -kInf;
    acc += counts[x] * std::log(p);
  }
  return acc;
}

}  // namespace detail

/// Maximizes sum_x counts[x] log theta[x] over theta in the hull, where
/// counts may be any non-negative reals. K=1 is closed form, K=2 a
/// safeguarded Newton search on the mixing weight, K>=3 exponentiated-gradient
/// ascent certified by the Frank-Wolfe gap. The result never falls below the
/// best single vertex.
inline MixtureFit maximize_mixture_loglik(const ConvexHullNull& null, std::span<const double> counts,
                                          std::span<const double> warm_start = {}) {
  const std::size_t m = null.alphabet_size();
  const std::size_t K = null.num_vertices();
  if (counts.size() != m) throw DimensionError("counts length differs from the null's alphabet size");

  double total = 0.0;
  for (std::size_t x = 0; x < m; ++x) {
    if (!(counts[x] >= 0.0)) throw ConfigError("counts must be non-negative");
    total += counts[x];
    if (counts[x] == 0.0) continue;
    bool covered = false;
    for (const auto& v : null.vertices()) covered = covered || v[x] > 0.0;
    if (!covered) return {-kInf, std::vector<double>(K, 1.0 / static_cast<double>(K))};
  }

  MixtureFit fit;
  if (K == 1 || total == 0.0) {
    fit.weights.assign(K, 0.0);
    fit.weights[0] = 1.0;
  } else if (K == 2) {
    const Pmf& a = null.vertex(0);
    const Pmf& b = null.vertex(1);
    auto derivs = [&](double w) {
      double g1 = 0.0;
      double g2 = 0.0;
      for (std::size_t x = 0; x < m; ++x) {
        if (counts[x] == 0.0) continue;
        const double diff = a[x] - b[x];
        if (diff == 0.0) continue;
        const double p = w * a[x] + (1.0 - w) * b[x];
        g1 += counts[x] * diff / p;
        g2 -= counts[x] * diff * diff / (p * p);
      }
      return std::pair{g1, g2};
    };
    const double start = warm_start.size() == 2 ? warm_start[0] : 0.5;
    const double w = concave_argmax_newton(derivs, 0.0, 1.0, start, 1e-14);
    fit.weights = {w, 1.0 - w};
  } else {
    std::vector<double> start(K, 1.0 / static_cast<double>(K));
    if (warm_start.size() == K) {
      // Keep every coordinate strictly positive so the multiplicative update can move it.
      for (std::size_t k = 0; k < K; ++k) start[k] = 0.999 * warm_start[k] + 0.001 / static_cast<double>(K);
    }
    auto eval = [&](const std::vector<double>& w) {
      SimplexValue out;
      out.gradient.assign(K, 0.0);
      double ll = 0.0;
      for (std::size_t x = 0; x < m; ++x) {
        if (counts[x] == 0.0) continue;
        const double p = detail::mixture_prob(null, w, x);
        if (p <= 0.0) return SimplexValue{kInf, std::vector<double>(K, 0.0)};
        ll += counts[x] * std::log(p);
        for (std::size_t k = 0; k < K; ++k) out.gradient[k] -= counts[x] * null.vertex(k)[x] / p / total;
      }
      out.value = -ll / total;
      return out;
    };
    SimplexOptions opts;
    opts.gap_tol = 1e-11;
    fit.weights = simplex_mirror_descent(eval, std::move(start), opts).weights;
  }
  fit.loglik = detail::mixture_loglik(null, fit.weights, counts);

  for (std::size_t k = 0; k < K; ++k) {
    const double ll = weighted_loglik(null.vertex(k), counts);
    if (ll > fit.loglik) {
      fit.loglik = ll;
      fit.weights.assign(K, 0.0);
      fit.weights[k] = 1.0;
    }
  }
  return fit;
}

/// Null maximum log-likelihood sup_{theta in hull} sum_x counts[x] log theta[x].
/// Returns -inf when every vertex misses an observed symbol.
inline MixtureFit null_mle_loglik(const ConvexHullNull& null, std::span<const std::size_t> counts,
                                  std::span<const double> warm_start = {}) {
  std::vector<double> c(counts.begin(), counts.end());
  double n = 0.0;
  for (double v : c) n += v;
  if (n < 1.0) throw ConfigError("null_mle_loglik needs at least one observation");
  return maximize_mixture_loglik(null, c, warm_start);
}

/// inf over the hull of KL(p || theta). +inf when no hull point dominates p.
inline KlInfResult kl_inf_hull(const Pmf& p, const ConvexHullNull& null) {
  if (p.size() != null.alphabet_size()) throw DimensionError("kl_inf_hull: alphabet sizes differ");
  MixtureFit fit = maximize_mixture_loglik(null, p.probs());
  KlInfResult res;
  res.minimizer = fit.weights;
  res.gamma_star = fit.loglik == -kInf ? kInf : kl_divergence(p, null.point(fit.weights));
  return res;
}

/// KL_inf of a finite-support distribution on [0,1] against the bounded-mean
/// null via the one-dimensional dual sup_phi E_P[log(1 + phi (X - mu0))].
/// The phi range defaults to the full dual domain [-1/(1-mu0), 1/mu0].
inline KlInfResult kl_inf_bounded_mean(const BoundedDistSpec& dist, const BoundedMeanNull& null,
                                       std::optional<std::pair<double, double>> phi_range = std::nullopt) {
  validate(dist);
  const DiscreteDist support = support_of(dist);
  const double mu0 = null.mu0;
  const double full_lo = -1.0 / (1.0 - mu0);
  const double full_hi = 1.0 / mu0;
  auto [lo, hi] = phi_range.value_or(std::pair{full_lo, full_hi});
  if (lo > hi || lo < full_lo - 1e-15 || hi > full_hi + 1e-15) {
    throw ConfigError("phi_range must lie inside [-1/(1-mu0), 1/mu0]");
  }
  auto objective = [&](double phi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < support.atoms.size(); ++i) {
      if (support.weights[i] == 0.0) continue;
      const double factor = 1.0 + phi * (support.atoms[i] - mu0);
      if (factor <= 0.0) return -kInf;
      acc += support.weights[i] * std::log(factor);
    }
    return acc;
  };
  const ScalarOptimum opt = golden_section_maximize(objective, lo, hi, 1e-12);
  KlInfResult res;
  res.gamma_star = std::max(opt.value, 0.0);
  res.dual_certificate = opt.argument;
  for (std::size_t i = 0; i < support.atoms.size(); ++i) {
    const double factor = 1.0 + opt.argument * (support.atoms[i] - mu0);
    res.minimizer.push_back(factor > 0.0 ? support.weights[i] / factor : 0.0);
  }
  return res;
}

}  // namespace seqtest

#endif  // SEQTEST_NULL_MODELS_HPP
