#ifndef SEQTEST_SADDLE_SOLVER_HPP
#define SEQTEST_SADDLE_SOLVER_HPP

// Convex-concave saddle problems for finite-alphabet log-ratio test functions:
//
//   J(f, w) = sum_x phat[x] f[x] - log sum_x theta_w[x] exp(f[x]),
//
// with f = log(phi) in the box [-log(1/eps), log(1/eps)]^m and theta_w a point
// of a convex hull null given by simplex weights w. J is concave in f and
// convex in w. Every returned point carries a duality gap certificate
//
//   gap = sup_f' J(f', w) - inf_w' J(f, w')
//
// computed exactly: the inner sup over f has a closed-form clamped solution
// and the inner inf over w is a maximum over hull vertices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "seqtest/core_prob.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/null_models.hpp"
#include "seqtest/scalar_search.hpp"
#include "seqtest/simplex_solver.hpp"

namespace seqtest {

struct SaddleProblem {
  /// Empirical pmf of the observations seen so far (need not be strictly positive).
  std::vector<double> empirical;
  ConvexHullNull null;
  double epsilon = 0.1;

  static SaddleProblem from_counts(std::span<const std::size_t> counts, ConvexHullNull null, double epsilon) {
    if (counts.size() != null.alphabet_size()) throw DimensionError("counts length differs from the null's alphabet size");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("log-ratio epsilon must lie in (0,1)");
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    if (n < 1.0) throw ConfigError("saddle problem needs at least one observation");
    SaddleProblem p;
    for (auto c : counts) p.empirical.push_back(static_cast<double>(c) / n);
    p.null = std::move(null);
    p.epsilon = epsilon;
    return p;
  }

  /// Half-width of the box for f = log(phi).
  double log_bound() const { return std::log(1.0 / epsilon); }
  std::size_t alphabet_size() const { return empirical.size(); }
};

struct SaddleSolution {
  std::vector<double> phi;
  std::vector<double> theta_weights;
  double gap = 0.0;
  /// inf_w J(phi, w): the objective the returned test function achieves.
  double value = 0.0;
  std::size_t iterations = 0;
};

enum class SaddleMethod {
  /// Mirror descent on the hull weights against an exact best response in f
  /// (a root search on the dual slope for two-vertex hulls).
  kBestResponseMirror,
  /// Simultaneous projected-gradient ascent in f and entropic mirror descent
  /// in w with 1/sqrt(t) steps and iterate averaging.
  kAveragedAscentDescent,
};

struct SaddleOptions {
  double gap_tol = 1e-8;
  std::size_t max_iters = 200000;
  SaddleMethod method = SaddleMethod::kBestResponseMirror;
  /// Optional starting point for the hull weights.
  std::vector<double> warm_weights;
  /// Starting f for the averaged method; empty means f = 0 (phi = 1).
  std::vector<double> warm_log_phi;
  /// Gap evaluations of the averaged method happen every this many steps.
  std::size_t check_every = 64;
};

/// Thrown when the certified gap stays above gap_tol within the iteration
/// budget. Carries the best iterate found.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, SaddleSolution best) : Error(what), best_(std::move(best)) {}
  const SaddleSolution& best() const { return best_; }
  double gap() const { return best_.gap; }

 private:
  SaddleSolution best_;
};

/// Best response in f against a fixed null point theta.
struct BestResponse {
  std::vector<double> log_phi;
  double value = 0.0;
};

namespace detail {

inline void check_problem(const SaddleProblem& problem) {
  if (problem.empirical.size() != problem.null.alphabet_size()) {
    throw DimensionError("saddle problem: empirical pmf and null differ in alphabet size");
  }
  if (!(problem.epsilon > 0.0 && problem.epsilon < 1.0)) throw ConfigError("log-ratio epsilon must lie in (0,1)");
}

/// sum_x phat[x] f[x] - log E_theta[e^f].
inline double saddle_objective_at(std::span<const double> empirical, const Pmf& theta, std::span<const double> f) {
  double lin = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) lin += empirical[x] * f[x];
  return lin - log_mgf(theta, f);
}

}  // namespace detail

/// J(f, theta_w) for f = log(phi).
inline double saddle_objective(const SaddleProblem& problem, std::span<const double> log_phi,
                               std::span<const double> weights) {
  detail::check_problem(problem);
  return detail::saddle_objective_at(problem.empirical, problem.null.point(weights), log_phi);
}

/// sup_f J(f, theta) over the box. Stationarity gives
/// f[x] = clamp(log(phat[x]/theta[x]) + c, -B, B) for a scalar c solving
/// exp(c) = sum_x theta[x] exp(f[x]); c is found exactly by scanning the
/// piecewise structure between clamping breakpoints.
inline BestResponse best_response(std::span<const double> empirical, const Pmf& theta, double log_bound) {
  const std::size_t m = empirical.size();
  const double B = log_bound;
  std::vector<double> ratio(m, 0.0);
  std::vector<char> free_coord(m, 0);
  BestResponse br;
  br.log_phi.assign(m, -B);
  double fixed_low_mass = 0.0;  // theta mass pinned at -B regardless of c
  std::vector<double> breaks;
  for (std::size_t x = 0; x < m; ++x) {
    const double p = empirical[x];
    const double t = theta[x];
    if (t > 0.0 && p > 0.0) {
      free_coord[x] = 1;
      ratio[x] = std::log(p / t);
      breaks.push_back(-B - ratio[x]);
      breaks.push_back(B - ratio[x]);
    } else if (t == 0.0 && p > 0.0) {
      br.log_phi[x] = B;
    } else if (t > 0.0) {
      fixed_low_mass += t;
    }
  }

  if (!breaks.empty()) {
    std::sort(breaks.begin(), breaks.end());
    const double elo = std::exp(-B);
    const double ehi = std::exp(B);
    double shift = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t seg = 0; seg <= breaks.size() && std::isnan(shift); ++seg) {
      const double seg_lo = seg == 0 ? -kInf : breaks[seg - 1];
      const double seg_hi = seg == breaks.size() ? kInf : breaks[seg];
      if (seg_hi <= seg_lo) continue;
      const double probe = seg == 0 ? seg_hi - 1.0 : (seg == breaks.size() ? seg_lo + 1.0 : 0.5 * (seg_lo + seg_hi));
      double pinned = fixed_low_mass * elo;
      double interior_mass = 0.0;
      for (std::size_t x = 0; x < m; ++x) {
        if (!free_coord[x]) continue;
        const double u = ratio[x] + probe;
        if (u <= -B) pinned += theta[x] * elo;
        else if (u >= B) pinned += theta[x] * ehi;
        else interior_mass += empirical[x];
      }
      const double slack = 1.0 - interior_mass;
      if (slack > 1e-14) {
        if (pinned <= 0.0) continue;
        const double c = std::log(pinned / slack);
        const double tol = 1e-12 * (1.0 + std::abs(c));
        if (c >= seg_lo - tol && c <= seg_hi + tol) shift = std::clamp(c, seg_lo, seg_hi);
      } else if (pinned == 0.0) {
        // Every free coordinate interior and nothing pinned: any c in the segment works.
        shift = probe;
      }
    }
    if (std::isnan(shift)) {
      // Numerical corner case: fall back to bisection on log Z(c) - c, which is nonincreasing.
      auto excess = [&](double c) {
        std::vector<double> f(br.log_phi);
        for (std::size_t x = 0; x < m; ++x) {
          if (free_coord[x]) f[x] = std::clamp(ratio[x] + c, -B, B);
        }
        return log_mgf(theta, f) - c;
      };
      double lo = breaks.front() - 1.0;
      double hi = breaks.back() + 1.0;
      while (excess(lo) < 0.0) lo -= 1.0 + std::abs(lo);
      while (excess(hi) > 0.0) hi += 1.0 + std::abs(hi);
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
      }
      shift = 0.5 * (lo + hi);
    }
    for (std::size_t x = 0; x < m; ++x) {
      if (free_coord[x]) br.log_phi[x] = std::clamp(ratio[x] + shift, -B, B);
    }
  }
  br.value = detail::saddle_objective_at(empirical, theta, br.log_phi);
  return br;
}

/// inf_w J(f, w) = sum_x phat[x] f[x] - psi0(f).
inline double primal_value(const SaddleProblem& problem, std::span<const double> log_phi) {
  double lin = 0.0;
  for (std::size_t x = 0; x < log_phi.size(); ++x) lin += problem.empirical[x] * log_phi[x];
  return lin - psi0_hull(problem.null, log_phi);
}

/// sup_f J(f, w).
inline double dual_value(const SaddleProblem& problem, std::span<const double> weights) {
  return best_response(problem.empirical, problem.null.point(weights), problem.log_bound()).value;
}

/// Duality gap of the pair (phi, w): sup_f' J(f', w) - inf_w' J(log phi, w').
inline double certify_gap(const SaddleProblem& problem, std::span<const double> phi, std::span<const double> weights) {
  detail::check_problem(problem);
  const std::size_t m = problem.alphabet_size();
  if (phi.size() != m) throw DimensionError("certify_gap: phi length differs from the alphabet size");
  if (weights.size() != problem.null.num_vertices()) throw DimensionError("certify_gap: one weight per hull vertex required");
  const double lo = problem.epsilon * (1.0 - 1e-12);
  const double hi = (1.0 / problem.epsilon) * (1.0 + 1e-12);
  std::vector<double> log_phi(m);
  for (std::size_t x = 0; x < m; ++x) {
    if (!(phi[x] >= lo && phi[x] <= hi)) throw DomainError("certify_gap: phi outside the class box");
    log_phi[x] = std::log(phi[x]);
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= -1e-15)) throw DomainError("certify_gap: negative hull weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("certify_gap: hull weights must sum to 1");
  return dual_value(problem, weights) - primal_value(problem, log_phi);
}

namespace detail {

inline std::vector<double> to_phi(std::span<const double> log_phi) {
  std::vector<double> phi(log_phi.size());
  for (std::size_t x = 0; x < phi.size(); ++x) phi[x] = std::exp(log_phi[x]);
  return phi;
}

/// Tracks the best primal point and the best dual point seen so far; their
/// difference is a valid gap certificate for the pair.
struct SaddleTracker {
  std::vector<double> best_f;
  double best_primal = -kInf;
  std::vector<double> best_w;
  double best_dual = kInf;

  void offer_primal(const std::vector<double>& f, double value) {
    if (value > best_primal) {
      best_primal = value;
      best_f = f;
    }
  }
  void offer_dual(const std::vector<double>& w, double value) {
    if (value < best_dual) {
      best_dual = value;
      best_w = w;
    }
  }
  double gap() const { return std::max(best_dual - best_primal, 0.0); }

  SaddleSolution solution(std::size_t iterations) const {
    return {to_phi(best_f), best_w, gap(), best_primal, iterations};
  }
};

inline std::vector<double> danskin_gradient(const SaddleProblem& problem, const Pmf& theta,
                                            std::span<const double> f) {
  const double base = log_mgf(theta, f);
  std::vector<double> g(problem.null.num_vertices());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = -std::exp(log_mgf(problem.null.vertex(k), f) - base);
  return g;
}

inline SaddleSolution solve_best_response(const SaddleProblem& problem, const SaddleOptions& opts) {
  const std::size_t K = problem.null.num_vertices();
  const double B = problem.log_bound();
  SaddleTracker track;
  std::size_t evals = 0;

  auto visit = [&](const std::vector<double>& w) {
    ++evals;
    const Pmf theta = problem.null.point(w);
    BestResponse br = best_response(problem.empirical, theta, B);
    track.offer_dual(w, br.value);
    track.offer_primal(br.log_phi, primal_value(problem, br.log_phi));
    return std::pair{std::move(br), theta};
  };

  if (K == 1) {
    visit({1.0});
    return track.solution(evals);
  }

  std::vector<double> start(K, 1.0 / static_cast<double>(K));
  if (opts.warm_weights.size() == K) start = opts.warm_weights;

  if (K == 2) {
    // The dual is convex in the weight; its Danskin derivative is monotone,
    // so a warm-started root search usually certifies in a few evaluations.
    auto slope = [&](double w) {
      auto [br, theta] = visit({w, 1.0 - w});
      const std::vector<double> g = danskin_gradient(problem, theta, br.log_phi);
      return g[0] - g[1];
    };
    monotone_root(slope, 0.0, 1.0, start[0]);
    if (track.gap() <= opts.gap_tol) return track.solution(evals);
    auto dual = [&](double w) { return visit({w, 1.0 - w}).first.value; };
    golden_section_minimize(dual, 0.0, 1.0, 1e-13);
    if (track.gap() <= opts.gap_tol) return track.solution(evals);
    start = track.best_w;
  }

  // Mirror descent on the convex dual function w -> sup_f J(f, w).
  for (double& w : start) w = 0.999 * w + 0.001 / static_cast<double>(K);
  auto eval = [&](const std::vector<double>& w) {
    auto [br, theta] = visit(w);
    return SimplexValue{br.value, danskin_gradient(problem, theta, br.log_phi)};
  };
  SimplexOptions sopts;
  sopts.gap_tol = 0.5 * opts.gap_tol;
  sopts.max_iters = opts.max_iters;
  // Stop early once the tracked certificate is good enough.
  auto guarded = [&](const std::vector<double>& w) {
    SimplexValue v = eval(w);
    if (track.gap() <= opts.gap_tol) {
      std::fill(v.gradient.begin(), v.gradient.end(), 0.0);
    }
    return v;
  };
  simplex_mirror_descent(guarded, std::move(start), sopts);
  return track.solution(evals);
}

inline SaddleSolution solve_averaged(const SaddleProblem& problem, const SaddleOptions& opts) {
  const std::size_t m = problem.alphabet_size();
  const std::size_t K = problem.null.num_vertices();
  const double B = problem.log_bound();
  std::vector<double> f(m, 0.0);
  if (opts.warm_log_phi.size() == m) {
    for (std::size_t x = 0; x < m; ++x) f[x] = std::clamp(opts.warm_log_phi[x], -B, B);
  }
  std::vector<double> w(K, 1.0 / static_cast<double>(K));
  if (opts.warm_weights.size() == K) w = opts.warm_weights;
  std::vector<double> f_avg = f;
  std::vector<double> w_avg = w;
  SaddleSolution best;
  best.gap = kInf;
  const double base_step = 1.0;
  const std::size_t check = std::max<std::size_t>(opts.check_every, 1);
  for (std::size_t t = 1; t <= opts.max_iters; ++t) {
    const Pmf theta = problem.null.point(w);
    const double lz = log_mgf(theta, f);
    std::vector<double> gf(m);
    for (std::size_t x = 0; x < m; ++x) {
      const double q = theta[x] > 0.0 ? theta[x] * std::exp(f[x] - lz) : 0.0;
      gf[x] = problem.empirical[x] - q;
    }
    const std::vector<double> gw = danskin_gradient(problem, theta, f);
    const double step = base_step / std::sqrt(static_cast<double>(t));
    for (std::size_t x = 0; x < m; ++x) f[x] = std::clamp(f[x] + step * gf[x], -B, B);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += (w[k] *= std::exp(-step * gw[k]));
    for (double& v : w) v /= total;

    const double inv = 1.0 / static_cast<double>(t + 1);
    for (std::size_t x = 0; x < m; ++x) f_avg[x] += (f[x] - f_avg[x]) * inv;
    for (std::size_t k = 0; k < K; ++k) w_avg[k] += (w[k] - w_avg[k]) * inv;

    if (t % check == 0 || t == opts.max_iters) {
      const double primal = primal_value(problem, f_avg);
      const double gap = std::max(dual_value(problem, w_avg) - primal, 0.0);
      if (gap < best.gap) best = {to_phi(f_avg), w_avg, gap, primal, t};
      if (gap <= opts.gap_tol) break;
    }
  }
  return best;
}

}  // namespace detail

/// Solves sup_phi inf_w J and returns a point whose certified gap is at most
/// opts.gap_tol. Throws SolverFailure (carrying the best iterate) otherwise.
inline SaddleSolution solve(const SaddleProblem& problem, const SaddleOptions& opts = {}) {
  detail::check_problem(problem);
  if (!(opts.gap_tol > 0.0)) throw ConfigError("saddle solver needs gap_tol > 0");
  SaddleSolution sol = opts.method == SaddleMethod::kAveragedAscentDescent ? detail::solve_averaged(problem, opts)
                                                                           : detail::solve_best_response(problem, opts);
  if (!(sol.gap <= opts.gap_tol)) {
    throw SolverFailure("saddle solver stopped with gap " + std::to_string(sol.gap) + " above tolerance " +
                            std::to_string(opts.gap_tol),
                        std::move(sol));
  }
  return sol;
}

}  // namespace seqtest

#endif  // SEQTEST_SADDLE_SOLVER_HPP
