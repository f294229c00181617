#ifndef SEQTEST_FUNCTION_CLASSES_HPP
#define SEQTEST_FUNCTION_CLASSES_HPP

// Test-function families and their ERM solvers:
//  - log-ratio class {x -> log phi[x] : phi in [eps, 1/eps]^m} on a finite alphabet,
//  - bet class {x -> log(1 + phi (x - mu0)) : phi in Phi_eps} on [0,1].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "seqtest/core_prob.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/null_models.hpp"
#include "seqtest/saddle_solver.hpp"
#include "seqtest/scalar_search.hpp"

namespace seqtest {

class LogRatioClass {
 public:
  LogRatioClass() = default;
  LogRatioClass(double epsilon, std::size_t alphabet_size) : epsilon_(epsilon), m_(alphabet_size) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("log-ratio epsilon must lie in (0,1)");
    if (alphabet_size < 2) throw ConfigError("log-ratio class needs an alphabet of size >= 2");
  }

  double epsilon() const { return epsilon_; }
  std::size_t alphabet_size() const { return m_; }
  double lower() const { return epsilon_; }
  double upper() const { return 1.0 / epsilon_; }
  /// Every member satisfies |f(x)| <= log(1/eps).
  double value_bound() const { return std::log(1.0 / epsilon_); }
  /// sup over members and symbols of f(x) - psi0(f); psi0(f) >= min f, so 2 log(1/eps).
  double max_log_factor() const { return 2.0 * value_bound(); }

 private:
  double epsilon_ = 0.1;
  std::size_t m_ = 2;
};

class BetClass {
 public:
  BetClass() = default;
  BetClass(double epsilon, double mu0) : epsilon_(epsilon), mu0_(mu0) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("bet epsilon must lie in (0,1)");
    if (!(mu0 > 0.0 && mu0 < 1.0)) throw ConfigError("bet class needs 0 < mu0 < 1");
  }

  double epsilon() const { return epsilon_; }
  double mu0() const { return mu0_; }
  double lower() const { return -(1.0 - epsilon_) / (1.0 - mu0_); }
  double upper() const { return (1.0 - epsilon_) / mu0_; }
  bool contains(double phi) const { return phi >= lower() && phi <= upper(); }
  /// sup over members and x in [0,1] of log(1 + phi (x - mu0)); psi0 is 0 for this class.
  double max_log_factor() const {
    return std::max(std::log1p(upper() * (1.0 - mu0_)), std::log1p(lower() * (0.0 - mu0_)));
  }

 private:
  double epsilon_ = 0.2;
  double mu0_ = 0.5;
};

struct LogRatioFunction {
  std::vector<double> phi;
};

struct BetFunction {
  double phi = 0.0;
  double mu0 = 0.5;
};

using TestFunction = std::variant<LogRatioFunction, BetFunction>;
using Observation = std::variant<std::size_t, double>;
using NullModel = std::variant<ConvexHullNull, BoundedMeanNull>;

/// The no-data default: phi = 1 everywhere, wealth factor exactly 1.
inline LogRatioFunction default_function(const LogRatioClass& cls) {
  return {std::vector<double>(cls.alphabet_size(), 1.0)};
}

/// The no-data default: phi = 0, wealth factor exactly 1.
inline BetFunction default_function(const BetClass& cls) { return {0.0, cls.mu0()}; }

inline double evaluate(const LogRatioFunction& f, std::size_t x) {
  if (x >= f.phi.size()) throw DomainError("symbol " + std::to_string(x) + " outside the alphabet");
  return std::log(f.phi[x]);
}

inline double evaluate(const BetFunction& f, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("bet observations must lie in [0,1]");
  return std::log1p(f.phi * (x - f.mu0));
}

inline double evaluate(const TestFunction& f, const Observation& x) {
  if (const auto* lr = std::get_if<LogRatioFunction>(&f)) {
    const auto* sym = std::get_if<std::size_t>(&x);
    if (sym == nullptr) throw DomainError("log-ratio functions take symbol observations");
    return evaluate(*lr, *sym);
  }
  const auto* real = std::get_if<double>(&x);
  if (real == nullptr) throw DomainError("bet functions take real observations in [0,1]");
  return evaluate(std::get<BetFunction>(f), *real);
}

inline std::vector<double> log_phi(const LogRatioFunction& f) {
  std::vector<double> out(f.phi.size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = std::log(f.phi[x]);
  return out;
}

inline double psi0_of(const LogRatioFunction& f, const ConvexHullNull& null) { return psi0_hull(null, log_phi(f)); }

/// E_Q[1 + phi (X - mu0)] = 1 for every Q with mean mu0.
inline double psi0_of(const BetFunction&, const BoundedMeanNull&) { return 0.0; }

inline double psi0_of(const TestFunction& f, const NullModel& null) {
  if (const auto* lr = std::get_if<LogRatioFunction>(&f)) {
    const auto* hull = std::get_if<ConvexHullNull>(&null);
    if (hull == nullptr) throw ConfigError("log-ratio functions pair with convex-hull nulls");
    return psi0_of(*lr, *hull);
  }
  const auto* bm = std::get_if<BoundedMeanNull>(&null);
  if (bm == nullptr) throw ConfigError("bet functions pair with bounded-mean nulls");
  const auto& bet = std::get<BetFunction>(f);
  if (std::abs(bet.mu0 - bm->mu0) > 0.0) throw ConfigError("bet function and null disagree on mu0");
  return 0.0;
}

/// Observations on [0,1] stored as distinct values with multiplicities, so
/// finite-support data costs O(support) per ERM evaluation.
class WeightedAtoms {
 public:
  void add(double x, double weight = 1.0) {
    auto [it, inserted] = index_.try_emplace(x, atoms_.size());
    if (inserted) atoms_.push_back({x, 0.0});
    atoms_[it->second].second += weight;
    total_ += weight;
  }
  std::span<const std::pair<double, double>> atoms() const { return atoms_; }
  double total() const { return total_; }
  bool empty() const { return atoms_.empty(); }

 private:
  std::vector<std::pair<double, double>> atoms_;
  std::unordered_map<double, std::size_t> index_;
  double total_ = 0.0;
};

/// Mean of log(1 + phi (x - mu0)) over the stored observations.
inline double bet_objective(const WeightedAtoms& data, double mu0, double phi) {
  double acc = 0.0;
  for (const auto& [x, w] : data.atoms()) {
    const double factor = 1.0 + phi * (x - mu0);
    if (factor <= 0.0) return -kInf;
    acc += w * std::log(factor);
  }
  return acc / data.total();
}

/// Empirical log-wealth maximizer over Phi_eps. The objective is concave with
/// a monotone derivative, so a bracketed Newton search on the derivative
/// resolves phi to machine precision (a value-based search stalls near
/// sqrt(machine epsilon) because the objective is flat at its peak).
inline BetFunction erm_bet(const BetClass& cls, const WeightedAtoms& data, double start = 0.0) {
  if (data.empty()) throw ConfigError("erm_bet needs at least one observation; use the phi = 0 default");
  const double mu0 = cls.mu0();
  auto derivs = [&](double phi) {
    double g1 = 0.0;
    double g2 = 0.0;
    for (const auto& [x, w] : data.atoms()) {
      const double d = x - mu0;
      const double r = d / (1.0 + phi * d);
      g1 += w * r;
      g2 -= w * r * r;
    }
    return std::pair{g1 / data.total(), g2 / data.total()};
  };
  return {concave_argmax_newton(derivs, cls.lower(), cls.upper(), start), mu0};
}

inline BetFunction erm_bet(const BetClass& cls, std::span<const double> observations) {
  WeightedAtoms data;
  for (double x : observations) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("bet observations must lie in [0,1]");
    data.add(x);
  }
  return erm_bet(cls, data);
}

struct LogRatioFit {
  LogRatioFunction function;
  SaddleSolution solution;
};

/// Empirical DV objective maximizer over the log-ratio class, via the saddle
/// solver. Throws SolverFailure when the gap cannot be certified.
inline LogRatioFit erm_log_ratio(const LogRatioClass& cls, const ConvexHullNull& null,
                                 std::span<const std::size_t> counts, const SaddleOptions& opts = {}) {
  if (counts.size() != cls.alphabet_size() || null.alphabet_size() != cls.alphabet_size()) {
    throw DimensionError("erm_log_ratio: class, null and counts must share the alphabet");
  }
  SaddleProblem problem = SaddleProblem::from_counts(counts, null, cls.epsilon());
  SaddleSolution sol = solve(problem, opts);
  LogRatioFunction f{sol.phi};
  for (double& v : f.phi) v = std::clamp(v, cls.lower(), cls.upper());
  return {std::move(f), std::move(sol)};
}

}  // namespace seqtest

#endif  // SEQTEST_FUNCTION_CLASSES_HPP
