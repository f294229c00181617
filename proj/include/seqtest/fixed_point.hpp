#ifndef SEQTEST_FIXED_POINT_HPP
#define SEQTEST_FIXED_POINT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

namespace seqtest {

struct FixedPointQuery {
  double K = 1.0;
  double L = 1.0;
};

/// K/L > max{1 - log L, (log K + 3)/2}; under this condition the largest
/// root of y = K + L log y is at most K + L log K + 2L.
inline bool fixed_point_applicable(const FixedPointQuery& q) {
  if (!(q.K > 0.0 && q.L > 0.0) || !std::isfinite(q.K) || !std::isfinite(q.L)) return false;
  return q.K / q.L > std::max(1.0 - std::log(q.L), 0.5 * (std::log(q.K) + 3.0));
}

inline double fixed_point_upper_bound(const FixedPointQuery& q) { return q.K + q.L * std::log(q.K) + 2.0 * q.L; }

/// Largest solution of y = K + L log y by iterating the map downward from
/// K + L log K + 2L. The map is a contraction on [y*, y0] (slope L/y < 1 for
/// y > L), so the iterates decrease monotonically to the largest root.
/// Returns nullopt when the applicability condition fails.
inline std::optional<double> solve_largest_root(const FixedPointQuery& q, double tol = 1e-12,
                                                std::size_t max_iters = 100000) {
  if (!fixed_point_applicable(q)) return std::nullopt;
  double y = fixed_point_upper_bound(q);
  for (std::size_t it = 0; it < max_iters; ++it) {
    const double next = q.K + q.L * std::log(y);
    // Successive differences shrink by the factor L/y, so the remaining error
    // is at most step * (L/y) / (1 - L/y).
    const double rate = q.L / next;
    const double step = std::abs(y - next);
    y = next;
    if (rate < 1.0 && step * rate / (1.0 - rate) <= tol) break;
  }
  return y;
}

}  // namespace seqtest

#endif  // SEQTEST_FIXED_POINT_HPP
