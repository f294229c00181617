#ifndef SEQTEST_SCALAR_SEARCH_HPP
#define SEQTEST_SCALAR_SEARCH_HPP

#include <cmath>
#include <concepts>
#include <cstddef>

namespace seqtest {

struct ScalarOptimum {
  double argument = 0.0;
  double value = 0.0;
};

/// Golden-section search for the maximum of a concave (unimodal) function on
/// [lo, hi]. The final bracket midpoint is compared against both endpoints so
/// boundary maxima are returned exactly. -inf values are allowed.
template <std::invocable<double> F>
ScalarOptimum golden_section_maximize(F&& f, double lo, double hi, double arg_tol = 1e-10,
                                      std::size_t max_iters = 400) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (std::size_t it = 0; it < max_iters && (b - a) > arg_tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  ScalarOptimum best{fc >= fd ? c : d, fc >= fd ? fc : fd};
  const double mid = 0.5 * (a + b);
  if (const double fm = f(mid); fm > best.value) best = {mid, fm};
  if (const double flo = f(lo); flo >= best.value) best = {lo, flo};
  if (const double fhi = f(hi); fhi >= best.value) best = {hi, fhi};
  return best;
}

template <std::invocable<double> F>
ScalarOptimum golden_section_minimize(F&& f, double lo, double hi, double arg_tol = 1e-10,
                                      std::size_t max_iters = 400) {
  auto r = golden_section_maximize([&](double t) { return -f(t); }, lo, hi, arg_tol, max_iters);
  return {r.argument, -r.value};
}

/// Root of a nonincreasing derivative on [lo, hi] (maximizer of a concave
/// function), by safeguarded Newton steps inside a shrinking bracket.
/// `derivs(t)` returns {g'(t), g''(t)} with g'' <= 0. Boundary maxima are
/// detected from the sign of g' at the endpoints and returned exactly; a
/// derivative that vanishes identically returns the start point.
template <typename D>
double concave_argmax_newton(D&& derivs, double lo, double hi, double start, double tol = 1e-15,
                             std::size_t max_iters = 200) {
  if (derivs(hi).first > 0.0) return hi;
  if (derivs(lo).first < 0.0) return lo;
  double t = (start > lo && start < hi) ? start : 0.5 * (lo + hi);
  for (std::size_t it = 0; it < max_iters; ++it) {
    const auto [g1, g2] = derivs(t);
    if (g1 == 0.0) return t;
    if (g1 > 0.0) lo = t; else hi = t;
    if (hi - lo <= tol) break;
    double next = (g2 < 0.0 && std::isfinite(g1) && std::isfinite(g2)) ? t - g1 / g2 : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= tol * 0.5) return next;
    t = next;
  }
  return 0.5 * (lo + hi);
}

/// Root of a nondecreasing function h on [lo, hi] by Illinois-modified
/// regula falsi inside a sign bracket, started from a warm guess. Returns lo
/// when h(lo) >= 0 and hi when h(hi) <= 0.
template <std::invocable<double> H>
double monotone_root(H&& h, double lo, double hi, double start, double arg_tol = 1e-14,
                     std::size_t max_iters = 200) {
  double hlo = h(lo);
  if (hlo >= 0.0) return lo;
  double hhi = h(hi);
  if (hhi <= 0.0) return hi;
  if (start > lo && start < hi) {
    const double hs = h(start);
    if (hs == 0.0) return start;
    // Probe a small step toward the root so a good warm start yields a tight bracket.
    const double step = 1e-3 * (hi - lo);
    if (hs < 0.0) {
      lo = start;
      hlo = hs;
      if (const double t = std::min(start + step, hi); t < hi) {
        const double ht = h(t);
        if (ht >= 0.0) { hi = t; hhi = ht; } else { lo = t; hlo = ht; }
      }
    } else {
      hi = start;
      hhi = hs;
      if (const double t = std::max(start - step, lo); t > lo) {
        const double ht = h(t);
        if (ht <= 0.0) { lo = t; hlo = ht; } else { hi = t; hhi = ht; }
      }
    }
  }
  int side = 0;
  for (std::size_t it = 0; it < max_iters && hi - lo > arg_tol; ++it) {
    double t = (lo * hhi - hi * hlo) / (hhi - hlo);
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    const double ht = h(t);
    if (ht == 0.0) return t;
    if (ht < 0.0) {
      lo = t;
      hlo = ht;
      if (side == -1) hhi *= 0.5;
      side = -1;
    } else {
      hi = t;
      hhi = ht;
      if (side == 1) hlo *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace seqtest

#endif  // SEQTEST_SCALAR_SEARCH_HPP
