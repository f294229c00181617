#ifndef SEQTEST_UNIVERSAL_UI_HPP
#define SEQTEST_UNIVERSAL_UI_HPP

// Universal-inference e-process on a finite alphabet: the Krichevsky-Trofimov
// (add-1/2) mixture likelihood divided by the running null maximum likelihood.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "seqtest/core_prob.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/null_models.hpp"
#include "seqtest/stopping.hpp"

namespace seqtest {

/// Sequential state of the KT mixture.
class KtState {
 public:
  explicit KtState(std::size_t alphabet_size) : counts_(alphabet_size, 0) {
    if (alphabet_size < 2) throw ConfigError("KT mixture needs an alphabet of size >= 2");
  }

  /// (1/2 + count[x]) / (m/2 + n).
  double predict(std::size_t x) const {
    if (x >= counts_.size()) throw DomainError("symbol " + std::to_string(x) + " outside the alphabet");
    return (0.5 + static_cast<double>(counts_[x])) / (0.5 * static_cast<double>(counts_.size()) + static_cast<double>(n_));
  }

  void observe(std::size_t x) {
    log_mix_ += std::log(predict(x));
    ++counts_[x];
    ++n_;
  }

  std::span<const std::size_t> counts() const { return counts_; }
  std::size_t n() const { return n_; }
  std::size_t alphabet_size() const { return counts_.size(); }
  /// log of the KT mixture probability of the sequence seen so far.
  double log_mix() const { return log_mix_; }

 private:
  std::vector<std::size_t> counts_;
  std::size_t n_ = 0;
  double log_mix_ = 0.0;
};

inline double kt_predict(const KtState& state, std::size_t x) { return state.predict(x); }

/// log W^UI_n = log KT mixture - null max log-likelihood. The null MLE is
/// re-solved every round, warm-started from the previous hull weights.
class UiEProcess {
 public:
  explicit UiEProcess(ConvexHullNull null)
      : kt_(null.alphabet_size()), null_(std::move(null)), weights_(null_.num_vertices(), 1.0 / static_cast<double>(null_.num_vertices())) {}

  /// Consumes one symbol and returns the new log-wealth (+inf when the null
  /// gives the data probability zero).
  double step(std::size_t x) {
    kt_.observe(x);
    const MixtureFit fit = null_mle_loglik(null_, kt_.counts(), weights_);
    if (fit.loglik == -kInf) {
      log_wealth_ = kInf;
    } else {
      weights_ = fit.weights;
      null_loglik_ = fit.loglik;
      log_wealth_ = kt_.log_mix() - fit.loglik;
    }
    return log_wealth_;
  }

  const KtState& kt() const { return kt_; }
  const ConvexHullNull& null() const { return null_; }
  double log_wealth() const { return log_wealth_; }
  double null_loglik() const { return null_loglik_; }
  std::span<const double> null_weights() const { return weights_; }
  std::size_t n() const { return kt_.n(); }

 private:
  KtState kt_;
  ConvexHullNull null_;
  std::vector<double> weights_;
  double log_wealth_ = 0.0;
  double null_loglik_ = 0.0;
};

inline double ui_update(UiEProcess& state, std::size_t x) { return state.step(x); }

inline std::optional<std::size_t> ui_stop(std::span<const double> log_wealth, double alpha) {
  return first_crossing(log_wealth, alpha);
}

/// KT log-probability of any sequence with these counts; the add-1/2 product
/// depends on the counts only.
inline double kt_log_mix(std::span<const std::size_t> counts) {
  KtState kt(counts.size());
  for (std::size_t x = 0; x < counts.size(); ++x) {
    for (std::size_t i = 0; i < counts[x]; ++i) kt.observe(x);
  }
  return kt.log_mix();
}

/// Realized regret of the KT mixture against the unrestricted MLE (the
/// empirical pmf): -n H(phat) - log KT.
inline double kt_regret(std::span<const std::size_t> counts, double log_mix) {
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  if (n < 1.0) throw ConfigError("kt_regret needs at least one observation");
  double best = 0.0;
  for (auto c : counts) {
    if (c > 0) best += static_cast<double>(c) * std::log(static_cast<double>(c) / n);
  }
  return best - log_mix;
}

inline double kt_regret(std::span<const std::size_t> counts) { return kt_regret(counts, kt_log_mix(counts)); }

inline double kt_regret(const KtState& state) { return kt_regret(state.counts(), state.log_mix()); }

}  // namespace seqtest

#endif  // SEQTEST_UNIVERSAL_UI_HPP
