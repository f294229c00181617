#ifndef SEQTEST_CORE_PROB_HPP
#define SEQTEST_CORE_PROB_HPP

// Probability primitives on finite alphabets and on [0,1]. Natural logarithm
// everywhere; +infinity is a legitimate value for divergences, never an error.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "seqtest/errors.hpp"

namespace seqtest {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPmfSumTolerance = 1e-12;

/// log(sum_i exp(v_i)); returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> values) {
  double top = -kInf;
  for (double v : values) top = std::max(top, v);
  if (top == -kInf) return -kInf;
  if (top == kInf) return kInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

/// Probability mass function on {0, ..., m-1}, m >= 2.
class Pmf {
 public:
  Pmf() = default;

  explicit Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) throw ConfigError("pmf needs an alphabet of size >= 2");
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) throw ConfigError("pmf entries must be finite and non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > kPmfSumTolerance) {
      throw ConfigError("pmf entries sum to " + std::to_string(total) + ", not 1");
    }
    for (double& p : probs_) p /= total;
  }

  Pmf(std::initializer_list<double> probs) : Pmf(std::vector<double>(probs)) {}

  /// Uniform pmf on m symbols.
  static Pmf uniform(std::size_t m) {
    if (m < 2) throw ConfigError("pmf needs an alphabet of size >= 2");
    return Pmf(std::vector<double>(m, 1.0 / static_cast<double>(m)), Unchecked{});
  }

  /// Convex combination sum_k weights[k] * vertices[k].
  static Pmf mixture(std::span<const Pmf> vertices, std::span<const double> weights) {
    if (vertices.empty() || vertices.size() != weights.size()) {
      throw DimensionError("mixture needs one weight per vertex");
    }
    std::vector<double> out(vertices.front().size(), 0.0);
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      if (vertices[k].size() != out.size()) throw DimensionError("mixture vertices differ in alphabet size");
      for (std::size_t x = 0; x < out.size(); ++x) out[x] += weights[k] * vertices[k][x];
    }
    double total = 0.0;
    for (double p : out) total += p;
    for (double& p : out) p /= total;
    return Pmf(std::move(out), Unchecked{});
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t x) const { return probs_[x]; }
  std::span<const double> probs() const { return probs_; }

  friend bool operator==(const Pmf&, const Pmf&) = default;

 private:
  struct Unchecked {};
  Pmf(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

/// KL(p || q) with 0 log 0 = 0. Returns +inf when p is not absolutely
/// continuous with respect to q.
inline double kl_divergence(const Pmf& p, const Pmf& q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: alphabet sizes differ");
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    if (q[x] == 0.0) return kInf;
    acc += p[x] * std::log(p[x] / q[x]);
  }
  return std::max(acc, 0.0);
}

inline double shannon_entropy(const Pmf& p) {
  double acc = 0.0;
  for (double v : p.probs()) {
    if (v > 0.0) acc -= v * std::log(v);
  }
  return acc;
}

/// splitmix64 finalizer; the counter-based mixing step for substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Reproducible random substream identified by (master_seed, stream_index).
/// Stream i's engine seed is a pure function of the pair, so replications
/// can be generated in any order or in parallel.
struct SeededStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  std::mt19937_64 engine() const {
    const std::uint64_t a = splitmix64(master_seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(stream_index + 0x632BE59BD9B4E019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
  }

  /// An independent stream for a different purpose (e.g. injected noise)
  /// attached to the same replication index.
  SeededStream split(std::uint64_t purpose) const {
    return {splitmix64(master_seed ^ splitmix64(purpose * 0xD1B54A32D192ED03ULL + 1)), stream_index};
  }
};

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF sampler over a finite pmf.
class CategoricalSampler {
 public:
  CategoricalSampler(const Pmf& p, std::mt19937_64 engine) : engine_(std::move(engine)) {
    cdf_.reserve(p.size());
    double acc = 0.0;
    for (double v : p.probs()) cdf_.push_back(acc += v);
    last_positive_ = 0;
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (p[x] > 0.0) last_positive_ = x;
    }
  }

  std::size_t operator()() {
    const double u = uniform01(engine_);
    for (std::size_t x = 0; x < last_positive_; ++x) {
      if (u < cdf_[x]) return x;
    }
    return last_positive_;
  }

 private:
  std::mt19937_64 engine_;
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

inline std::vector<std::size_t> sample(const Pmf& p, const SeededStream& stream, std::size_t n) {
  CategoricalSampler draw(p, stream.engine());
  std::vector<std::size_t> out(n);
  for (auto& x : out) x = draw();
  return out;
}

struct Bernoulli {
  double p = 0.5;
};
struct BetaDist {
  double a = 1.0;
  double b = 1.0;
};
struct DiscreteDist {
  std::vector<double> atoms;
  std::vector<double> weights;
};

/// Data-generating distribution on [0,1].
using BoundedDistSpec = std::variant<Bernoulli, BetaDist, DiscreteDist>;

inline void validate(const BoundedDistSpec& dist) {
  if (const auto* b = std::get_if<Bernoulli>(&dist)) {
    if (!(b->p >= 0.0 && b->p <= 1.0)) throw ConfigError("bernoulli p must lie in [0,1]");
  } else if (const auto* beta = std::get_if<BetaDist>(&dist)) {
    if (!(beta->a > 0.0 && beta->b > 0.0 && std::isfinite(beta->a) && std::isfinite(beta->b))) {
      throw ConfigError("beta parameters must be positive");
    }
  } else {
    const auto& d = std::get<DiscreteDist>(dist);
    if (d.atoms.empty() || d.atoms.size() != d.weights.size()) {
      throw ConfigError("discrete distribution needs matching non-empty atoms and weights");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < d.atoms.size(); ++i) {
      if (!(d.atoms[i] >= 0.0 && d.atoms[i] <= 1.0)) throw ConfigError("discrete atoms must lie in [0,1]");
      if (!(d.weights[i] >= 0.0) || !std::isfinite(d.weights[i])) throw ConfigError("discrete weights must be non-negative");
      total += d.weights[i];
    }
    if (std::abs(total - 1.0) > kPmfSumTolerance) throw ConfigError("discrete weights must sum to 1");
  }
}

inline bool has_finite_support(const BoundedDistSpec& dist) {
  return !std::holds_alternative<BetaDist>(dist);
}

/// Atoms and weights of a finite-support distribution (Bernoulli or discrete).
inline DiscreteDist support_of(const BoundedDistSpec& dist) {
  if (const auto* b = std::get_if<Bernoulli>(&dist)) return {{0.0, 1.0}, {1.0 - b->p, b->p}};
  if (const auto* d = std::get_if<DiscreteDist>(&dist)) return *d;
  throw ConfigError("distribution does not have finite support");
}

inline double mean_of(const BoundedDistSpec& dist) {
  if (const auto* b = std::get_if<Bernoulli>(&dist)) return b->p;
  if (const auto* beta = std::get_if<BetaDist>(&dist)) return beta->a / (beta->a + beta->b);
  const auto& d = std::get<DiscreteDist>(dist);
  double m = 0.0;
  for (std::size_t i = 0; i < d.atoms.size(); ++i) m += d.atoms[i] * d.weights[i];
  return m;
}

/// Streaming sampler for a BoundedDistSpec.
class BoundedSampler {
 public:
  BoundedSampler(BoundedDistSpec dist, std::mt19937_64 engine) : dist_(std::move(dist)), engine_(std::move(engine)) {
    validate(dist_);
    if (const auto* beta = std::get_if<BetaDist>(&dist_)) {
      gamma_a_ = std::gamma_distribution<double>(beta->a, 1.0);
      gamma_b_ = std::gamma_distribution<double>(beta->b, 1.0);
    } else if (const auto* d = std::get_if<DiscreteDist>(&dist_)) {
      double acc = 0.0;
      for (double w : d->weights) cdf_.push_back(acc += w);
    }
  }

  double operator()() {
    if (const auto* b = std::get_if<Bernoulli>(&dist_)) return uniform01(engine_) < b->p ? 1.0 : 0.0;
    if (std::holds_alternative<BetaDist>(dist_)) {
      const double ga = gamma_a_(engine_);
      const double gb = gamma_b_(engine_);
      return ga / (ga + gb);
    }
    const auto& d = std::get<DiscreteDist>(dist_);
    const double u = uniform01(engine_) * cdf_.back();
    for (std::size_t i = 0; i + 1 < cdf_.size(); ++i) {
      if (u < cdf_[i]) return d.atoms[i];
    }
    return d.atoms.back();
  }

 private:
  BoundedDistSpec dist_;
  std::mt19937_64 engine_;
  std::gamma_distribution<double> gamma_a_;
  std::gamma_distribution<double> gamma_b_;
  std::vector<double> cdf_;
};

inline std::vector<double> sample_bounded(const BoundedDistSpec& dist, const SeededStream& stream, std::size_t n) {
  BoundedSampler draw(dist, stream.engine());
  std::vector<double> out(n);
  for (auto& x : out) x = draw();
  return out;
}

}  // namespace seqtest

#endif  // SEQTEST_CORE_PROB_HPP
