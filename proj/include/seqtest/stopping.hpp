#ifndef SEQTEST_STOPPING_HPP
#define SEQTEST_STOPPING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqtest/errors.hpp"

namespace seqtest {

/// log(1/alpha), the rejection threshold for log-wealth.
inline double log_threshold(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  return -std::log(alpha);
}

/// First n (1-based) with log_wealth[n-1] >= log(1/alpha), if any.
inline std::optional<std::size_t> first_crossing(std::span<const double> log_wealth, double alpha) {
  const double threshold = log_threshold(alpha);
  for (std::size_t i = 0; i < log_wealth.size(); ++i) {
    if (log_wealth[i] >= threshold) return i + 1;
  }
  return std::nullopt;
}

/// Records stopping times for several levels along one wealth path.
class CrossingTracker {
 public:
  explicit CrossingTracker(std::span<const double> alphas) : taus_(alphas.size()) {
    for (double a : alphas) thresholds_.push_back(log_threshold(a));
  }

  /// Feeds log W_n; returns true once every level has been crossed.
  bool update(std::size_t n, double log_wealth) {
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      if (!taus_[i] && log_wealth >= thresholds_[i]) {
        taus_[i] = n;
        ++crossed_;
      }
    }
    return done();
  }

  bool done() const { return crossed_ == thresholds_.size(); }
  const std::vector<std::optional<std::size_t>>& taus() const { return taus_; }

 private:
  std::vector<double> thresholds_;
  std::vector<std::optional<std::size_t>> taus_;
  std::size_t crossed_ = 0;
};

}  // namespace seqtest

#endif  // SEQTEST_STOPPING_HPP
