#ifndef SEQTEST_DV_EPROCESS_HPP
#define SEQTEST_DV_EPROCESS_HPP

// Donsker-Varadhan e-processes: W_n = W_{n-1} exp(f_n(X_n) - psi0(f_n)) with
// f_n fitted by ERM on X_1..X_{n-1}; the corrected variant for an estimated
// psi0; and truncated countable mixtures over function classes.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seqtest/core_prob.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/function_classes.hpp"
#include "seqtest/null_models.hpp"
#include "seqtest/saddle_solver.hpp"
#include "seqtest/stopping.hpp"

namespace seqtest {

/// Bet-class learner for bounded-mean testing (the GRAPA bet).
class BetLearner {
 public:
  using observation_type = double;
  using function_type = BetFunction;

  explicit BetLearner(BetClass cls) : cls_(cls), f_(default_function(cls_)) {}

  double evaluate(double x) const { return seqtest::evaluate(f_, x); }
  double psi0() const { return 0.0; }
  /// sup_x f(x) for the current function.
  double max_value() const { return std::log1p(f_.phi > 0.0 ? f_.phi * (1.0 - f_.mu0) : -f_.phi * f_.mu0); }
  void observe(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("bet observations must lie in [0,1]");
    data_.add(x);
  }
  bool refit() {
    if (!data_.empty()) f_ = erm_bet(cls_, data_, f_.phi);
    return true;
  }

  const BetFunction& current() const { return f_; }
  const BetClass& function_class() const { return cls_; }
  double max_log_factor() const { return cls_.max_log_factor(); }

 private:
  BetClass cls_;
  BetFunction f_;
  WeightedAtoms data_;
};

/// Log-ratio learner for a convex-hull null on a finite alphabet.
class LogRatioLearner {
 public:
  using observation_type = std::size_t;
  using function_type = LogRatioFunction;

  /// Tolerance schedule for the per-round saddle solves.
  enum class GapSchedule { kFixed, kInverseSquare };

  LogRatioLearner(LogRatioClass cls, ConvexHullNull null, SaddleOptions opts = {},
                  GapSchedule schedule = GapSchedule::kFixed)
      : cls_(cls), null_(std::move(null)), opts_(std::move(opts)), schedule_(schedule),
        f_(default_function(cls_)), log_phi_(cls_.alphabet_size(), 0.0), counts_(cls_.alphabet_size(), 0) {
    if (null_.alphabet_size() != cls_.alphabet_size()) throw DimensionError("log-ratio class and null differ in alphabet size");
  }

  double evaluate(std::size_t x) const {
    if (x >= log_phi_.size()) throw DomainError("symbol " + std::to_string(x) + " outside the alphabet");
    return log_phi_[x];
  }
  double psi0() const { return psi0_; }
  double max_value() const {
    double top = -kInf;
    for (double v : log_phi_) top = std::max(top, v);
    return top;
  }
  void observe(std::size_t x) {
    if (x >= counts_.size()) throw DomainError("symbol " + std::to_string(x) + " outside the alphabet");
    ++counts_[x];
    ++n_;
  }

  /// Re-solves the ERM; on solver failure the previous function is kept
  /// (still predictable) and the failure is counted.
  bool refit() {
    if (n_ == 0) return true;
    SaddleOptions opts = opts_;
    if (schedule_ == GapSchedule::kInverseSquare) {
      const double n = static_cast<double>(n_ + 1);
      opts.gap_tol = std::max(std::min(1e-4, 1.0 / (n * n)), 1e-12);
    }
    opts.warm_weights = warm_;
    try {
      LogRatioFit fit = erm_log_ratio(cls_, null_, counts_, opts);
      warm_ = fit.solution.theta_weights;
      set_function(std::move(fit.function));
      last_gap_ = fit.solution.gap;
      return true;
    } catch (const SolverFailure& e) {
      ++solver_failures_;
      last_gap_ = e.gap();
      return false;
    }
  }

  const LogRatioFunction& current() const { return f_; }
  const LogRatioClass& function_class() const { return cls_; }
  const ConvexHullNull& null() const { return null_; }
  std::size_t solver_failures() const { return solver_failures_; }
  double last_gap() const { return last_gap_; }
  double max_log_factor() const { return cls_.max_log_factor(); }

 private:
  void set_function(LogRatioFunction f) {
    f_ = std::move(f);
    log_phi_ = log_phi(f_);
    psi0_ = psi0_hull(null_, log_phi_);
  }

  LogRatioClass cls_;
  ConvexHullNull null_;
  SaddleOptions opts_;
  GapSchedule schedule_;
  LogRatioFunction f_;
  std::vector<double> log_phi_;
  double psi0_ = 0.0;
  std::vector<std::size_t> counts_;
  std::size_t n_ = 0;
  std::vector<double> warm_;
  std::size_t solver_failures_ = 0;
  double last_gap_ = 0.0;
};

template <typename L>
concept Learner = requires(L l, const L cl, typename L::observation_type x) {
  { cl.evaluate(x) } -> std::convertible_to<double>;
  { cl.psi0() } -> std::convertible_to<double>;
  { cl.max_value() } -> std::convertible_to<double>;
  { cl.max_log_factor() } -> std::convertible_to<double>;
  l.observe(x);
  { l.refit() } -> std::convertible_to<bool>;
};

/// The DV e-process. Each step scores x with the current predictable f, then
/// refits f for the next round. The order is what makes f_n depend on
/// X_1..X_{n-1} only.
template <Learner L>
class DvEProcess {
 public:
  using observation_type = typename L::observation_type;

  explicit DvEProcess(L learner, std::size_t refit_every = 1)
      : learner_(std::move(learner)), refit_every_(refit_every == 0 ? 1 : refit_every) {}

  /// Returns log W_n after consuming x.
  double step(const observation_type& x) {
    last_increment_ = learner_.evaluate(x) - learner_.psi0();
    log_wealth_ += last_increment_;
    ++n_;
    learner_.observe(x);
    if (n_ % refit_every_ == 0) learner_.refit();
    return log_wealth_;
  }

  double log_wealth() const { return log_wealth_; }
  double last_increment() const { return last_increment_; }
  std::size_t n() const { return n_; }
  const L& learner() const { return learner_; }

 private:
  L learner_;
  std::size_t refit_every_;
  double log_wealth_ = 0.0;
  double last_increment_ = 0.0;
  std::size_t n_ = 0;
};

inline std::optional<std::size_t> dv_stop(std::span<const double> log_wealth, double alpha) {
  return first_crossing(log_wealth, alpha);
}

/// eta_n = scale / n^power; power > 1 keeps sum_n eta_n B finite for constant B.
struct EtaSchedule {
  double scale = 0.0;
  double power = 2.0;

  double operator()(std::size_t n) const {
    return scale == 0.0 ? 0.0 : scale / std::pow(static_cast<double>(n), power);
  }

  /// Upper bound on sum_{n>=1} eta_n * bound; +inf when the series diverges.
  double weighted_sum_bound(double bound) const {
    if (scale == 0.0) return 0.0;
    if (power <= 1.0) return kInf;
    // zeta(p) <= 1 + 1/(p-1); exact pi^2/6 at p = 2.
    const double zeta = power == 2.0 ? std::numbers::pi * std::numbers::pi / 6.0 : 1.0 + 1.0 / (power - 1.0);
    return scale * zeta * bound;
  }
};

/// Corrected e-process for an upper estimate psi_hat of psi0 that may fail
/// with probability eta_n: each factor is exp(f_n(x) - psi_hat) / (1 + eta_n B_n).
template <Learner L>
class CorrectedEProcess {
 public:
  using observation_type = typename L::observation_type;

  explicit CorrectedEProcess(L learner, std::size_t refit_every = 1)
      : learner_(std::move(learner)), refit_every_(refit_every == 0 ? 1 : refit_every) {}

  /// Checks that the class bound keeps exp(f(x) - psi_hat) <= bound for every
  /// member and every psi_hat >= psi0 - max_underestimate.
  static void check_bound(double class_max_log_factor, double max_underestimate, double bound) {
    if (!(bound > 0.0) || class_max_log_factor + max_underestimate > std::log(bound) + 1e-12) {
      throw ConfigError("correction bound B_n is smaller than the class's maximal wealth factor");
    }
  }

  double step(const observation_type& x, double psi_hat, double eta, double bound) {
    if (!(eta >= 0.0)) throw ConfigError("eta_n must be non-negative");
    if (learner_.max_value() - psi_hat > std::log(bound) + 1e-12) {
      throw ConfigError("exp(f_n(x) - psi_hat) exceeds B_n for some x in the domain");
    }
    last_increment_ = learner_.evaluate(x) - psi_hat - std::log1p(eta * bound);
    log_wealth_ += last_increment_;
    ++n_;
    learner_.observe(x);
    if (n_ % refit_every_ == 0) learner_.refit();
    return log_wealth_;
  }

  double log_wealth() const { return log_wealth_; }
  double last_increment() const { return last_increment_; }
  std::size_t n() const { return n_; }
  const L& learner() const { return learner_; }

 private:
  L learner_;
  std::size_t refit_every_;
  double log_wealth_ = 0.0;
  double last_increment_ = 0.0;
  std::size_t n_ = 0;
};

/// Produces psi_hat >= psi0 except on an event of probability eta_n, where it
/// under-shoots by a fixed amount. Used to exercise the corrected process.
class NoisyPsiEstimator {
 public:
  NoisyPsiEstimator(double noise_scale, double under_shift, std::mt19937_64 engine)
      : noise_scale_(noise_scale), under_shift_(under_shift), engine_(std::move(engine)) {
    if (!(noise_scale >= 0.0) || !(under_shift >= 0.0)) throw ConfigError("psi noise parameters must be non-negative");
  }

  double operator()(double psi0, double eta) {
    const double u = uniform01(engine_);
    const double z = std::abs(normal_(engine_));
    if (u < eta) return psi0 - under_shift_;
    return psi0 + noise_scale_ * z;
  }

  double under_shift() const { return under_shift_; }

 private:
  double noise_scale_;
  double under_shift_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// c_j = 6 / (pi^2 (j+1)^2), j >= 0.
inline double mixture_weight(std::size_t j) {
  const double k = static_cast<double>(j + 1);
  return 6.0 / (std::numbers::pi * std::numbers::pi * k * k);
}

/// Truncated countable mixture sum_{j < J} c_j W^j. The discarded tail weight
/// is not redistributed, so the total weight stays below one.
template <Learner L>
class MixtureEProcess {
 public:
  using observation_type = typename L::observation_type;

  explicit MixtureEProcess(std::vector<DvEProcess<L>> components) : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("mixture needs at least one component");
    for (std::size_t j = 0; j < components_.size(); ++j) log_weights_.push_back(std::log(mixture_weight(j)));
    terms_.resize(components_.size());
  }

  double step(const observation_type& x) {
    for (std::size_t j = 0; j < components_.size(); ++j) terms_[j] = log_weights_[j] + components_[j].step(x);
    log_wealth_ = log_sum_exp(terms_);
    ++n_;
    return log_wealth_;
  }

  double log_wealth() const { return log_wealth_; }
  std::size_t n() const { return n_; }
  std::span<const DvEProcess<L>> components() const { return components_; }
  std::span<const double> log_weights() const { return log_weights_; }

 private:
  std::vector<DvEProcess<L>> components_;
  std::vector<double> log_weights_;
  std::vector<double> terms_;
  double log_wealth_ = 0.0;
  std::size_t n_ = 0;
};

/// Bet-class mixture with eps_j = 2^-(j+1), j < components.
inline MixtureEProcess<BetLearner> make_bet_mixture(double mu0, std::size_t components = 8, std::size_t refit_every = 1) {
  std::vector<DvEProcess<BetLearner>> parts;
  for (std::size_t j = 0; j < components; ++j) {
    parts.emplace_back(BetLearner(BetClass(std::ldexp(1.0, -static_cast<int>(j + 1)), mu0)), refit_every);
  }
  return MixtureEProcess<BetLearner>(std::move(parts));
}

/// Log-ratio mixture with eps_j = 2^-(j+1), j < components.
inline MixtureEProcess<LogRatioLearner> make_log_ratio_mixture(const ConvexHullNull& null, std::size_t components = 8,
                                                               const SaddleOptions& opts = {}, std::size_t refit_every = 1) {
  std::vector<DvEProcess<LogRatioLearner>> parts;
  for (std::size_t j = 0; j < components; ++j) {
    parts.emplace_back(LogRatioLearner(LogRatioClass(std::ldexp(1.0, -static_cast<int>(j + 1)), null.alphabet_size()), null, opts),
                       refit_every);
  }
  return MixtureEProcess<LogRatioLearner>(std::move(parts));
}

}  // namespace seqtest

#endif  // SEQTEST_DV_EPROCESS_HPP
