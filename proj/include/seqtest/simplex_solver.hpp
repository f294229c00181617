#ifndef SEQTEST_SIMPLEX_SOLVER_HPP
#define SEQTEST_SIMPLEX_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace seqtest {

struct SimplexValue {
  double value = 0.0;
  std::vector<double> gradient;
};

struct SimplexResult {
  std::vector<double> weights;
  double value = 0.0;
  /// Frank-Wolfe gap sum_k w_k g_k - min_k g_k; upper-bounds the distance
  /// to the optimal value for convex objectives.
  double fw_gap = 0.0;
  std::size_t iterations = 0;
};

struct SimplexOptions {
  double gap_tol = 1e-10;
  std::size_t max_iters = 10000;
  double initial_step = 1.0;
};

inline double frank_wolfe_gap(const std::vector<double>& w, const std::vector<double>& g) {
  double inner = 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] > 0.0) inner += w[k] * g[k];
    lowest = std::min(lowest, g[k]);
  }
  return std::max(inner - lowest, 0.0);
}

/// Exponentiated-gradient (entropic mirror) descent for a convex function on
/// the probability simplex, with backtracking on the step size. `eval(w)`
/// returns the value and gradient at w; non-finite values are rejected by the
/// line search. Stops when the Frank-Wolfe gap falls below gap_tol.
template <typename Eval>
SimplexResult simplex_mirror_descent(Eval&& eval, std::vector<double> start, const SimplexOptions& opts = {}) {
  SimplexResult res;
  res.weights = std::move(start);
  SimplexValue cur = eval(res.weights);
  double step = opts.initial_step;
  std::vector<double> trial(res.weights.size());
  for (; res.iterations < opts.max_iters; ++res.iterations) {
    res.fw_gap = frank_wolfe_gap(res.weights, cur.gradient);
    if (res.fw_gap <= opts.gap_tol) break;
    // Gradient scale normalizes the first step; backtracking does the rest.
    double scale = 0.0;
    for (double g : cur.gradient) scale = std::max(scale, std::abs(g));
    if (!(scale > 0.0) || !std::isfinite(scale)) break;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      double gmin = std::numeric_limits<double>::infinity();
      for (double g : cur.gradient) gmin = std::min(gmin, g);
      double total = 0.0;
      for (std::size_t k = 0; k < trial.size(); ++k) {
        trial[k] = res.weights[k] * std::exp(-step * (cur.gradient[k] - gmin) / scale);
        total += trial[k];
      }
      for (double& t : trial) t /= total;
      SimplexValue next = eval(trial);
      if (std::isfinite(next.value) && next.value <= cur.value) {
        res.weights = trial;
        cur = std::move(next);
        accepted = true;
        step = std::min(2.0 * step, 50.0);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  res.fw_gap = frank_wolfe_gap(res.weights, cur.gradient);
  res.value = cur.value;
  return res;
}

}  // namespace seqtest

#endif  // SEQTEST_SIMPLEX_SOLVER_HPP
