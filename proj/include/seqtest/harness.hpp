#ifndef SEQTEST_HARNESS_HPP
#define SEQTEST_HARNESS_HPP

// Experiment driver: JSON configs, Monte Carlo stopping-time simulation,
// type-I validation, report emission and streaming decisions.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "seqtest/core_prob.hpp"
#include "seqtest/dv_eprocess.hpp"
#include "seqtest/errors.hpp"
#include "seqtest/fixed_point.hpp"
#include "seqtest/function_classes.hpp"
#include "seqtest/null_models.hpp"
#include "seqtest/stopping.hpp"
#include "seqtest/universal_ui.hpp"

namespace seqtest::harness {

using nlohmann::json;

enum class Method { kUi, kDvBet, kDvLogRatio, kDvMixture, kDvCorrected };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kUi: return "ui";
    case Method::kDvBet: return "dv_bet";
    case Method::kDvLogRatio: return "dv_log_ratio";
    case Method::kDvMixture: return "dv_mixture";
    case Method::kDvCorrected: return "dv_corrected";
  }
  return "?";
}

struct ClassSpec {
  enum class Kind { kBet, kLogRatio } kind = Kind::kBet;
  double epsilon = 0.2;
};

struct SolverSpec {
  double gap_tol = 1e-8;
  std::size_t max_iters = 200000;
  std::size_t refit_every = 1;
  bool inverse_square_gap = false;
  SaddleMethod method = SaddleMethod::kBestResponseMirror;

  SaddleOptions options() const {
    SaddleOptions o;
    o.gap_tol = gap_tol;
    o.max_iters = max_iters;
    o.method = method;
    return o;
  }
};

struct CorrectionSpec {
  EtaSchedule eta{1.0, 2.0};
  double noise_scale = 0.05;
  double under_shift = 0.5;
};

/// Categorical data (finite alphabet) or a distribution on [0,1].
using DataSpec = std::variant<Pmf, BoundedDistSpec>;

struct ExperimentConfig {
  Method method = Method::kUi;
  NullModel null;
  std::optional<DataSpec> data;
  std::optional<ClassSpec> function_class;
  std::vector<double> alpha_grid{0.1, 0.01, 0.001};
  std::size_t replications = 100;
  std::optional<std::size_t> horizon;
  std::uint64_t master_seed = 0;
  SolverSpec solver;
  std::size_t mixture_components = 8;
  CorrectionSpec correction;
  std::size_t workers = 1;
  std::optional<std::string> out_csv;
  std::optional<std::string> out_json;
  json echo;
};

namespace detail {

/// Reads keys from a JSON object and rejects any key that was never read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing key \"" + key + "\"");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + ": key \"" + key + "\" has the wrong type");
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key \"" + key + "\"");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline Method parse_method(const std::string& s) {
  if (s == "ui") return Method::kUi;
  if (s == "dv_bet") return Method::kDvBet;
  if (s == "dv_log_ratio") return Method::kDvLogRatio;
  if (s == "dv_mixture") return Method::kDvMixture;
  if (s == "dv_corrected") return Method::kDvCorrected;
  throw ConfigError("unknown method \"" + s + "\"");
}

inline NullModel parse_null(const json& j) {
  ObjectReader r(j, "null");
  const auto type = r.get<std::string>("type");
  NullModel out;
  if (type == "convex_hull") {
    std::vector<Pmf> vertices;
    for (const auto& v : r.at("vertices")) vertices.emplace_back(v.get<std::vector<double>>());
    out = ConvexHullNull(std::move(vertices));
  } else if (type == "bounded_mean") {
    out = BoundedMeanNull(r.get<double>("mu0"));
  } else {
    throw ConfigError("null: unknown type \"" + type + "\"");
  }
  r.finish();
  return out;
}

inline DataSpec parse_data(const json& j) {
  ObjectReader r(j, "data");
  const auto type = r.get<std::string>("type");
  DataSpec out;
  if (type == "categorical") {
    out = Pmf(r.get<std::vector<double>>("probs"));
  } else if (type == "bernoulli") {
    out = BoundedDistSpec{Bernoulli{r.get<double>("p")}};
  } else if (type == "beta") {
    out = BoundedDistSpec{BetaDist{r.get<double>("a"), r.get<double>("b")}};
  } else if (type == "discrete") {
    out = BoundedDistSpec{DiscreteDist{r.get<std::vector<double>>("atoms"), r.get<std::vector<double>>("weights")}};
  } else {
    throw ConfigError("data: unknown type \"" + type + "\"");
  }
  r.finish();
  if (const auto* b = std::get_if<BoundedDistSpec>(&out)) validate(*b);
  return out;
}

inline ClassSpec parse_class(const json& j) {
  ObjectReader r(j, "class");
  ClassSpec c;
  const auto kind = r.get<std::string>("class");
  if (kind == "bet") c.kind = ClassSpec::Kind::kBet;
  else if (kind == "log_ratio") c.kind = ClassSpec::Kind::kLogRatio;
  else throw ConfigError("class: unknown class \"" + kind + "\"");
  c.epsilon = r.get<double>("epsilon");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("class: epsilon must lie in (0,1)");
  r.finish();
  return c;
}

inline SolverSpec parse_solver(const json& j) {
  ObjectReader r(j, "solver");
  SolverSpec s;
  s.gap_tol = r.get_or("gap_tol", s.gap_tol);
  s.max_iters = r.get_or<std::size_t>("max_iters", s.max_iters);
  s.refit_every = r.get_or<std::size_t>("refit_every", s.refit_every);
  const auto schedule = r.get_or<std::string>("gap_schedule", "fixed");
  if (schedule == "inverse_square") s.inverse_square_gap = true;
  else if (schedule != "fixed") throw ConfigError("solver: gap_schedule must be \"fixed\" or \"inverse_square\"");
  const auto method = r.get_or<std::string>("method", "best_response");
  if (method == "averaged") s.method = SaddleMethod::kAveragedAscentDescent;
  else if (method != "best_response") throw ConfigError("solver: method must be \"best_response\" or \"averaged\"");
  if (!(s.gap_tol > 0.0)) throw ConfigError("solver: gap_tol must be positive");
  if (s.refit_every == 0) throw ConfigError("solver: refit_every must be >= 1");
  r.finish();
  return s;
}

inline CorrectionSpec parse_correction(const json& j) {
  ObjectReader r(j, "correction");
  CorrectionSpec c;
  if (r.has("eta_schedule")) {
    ObjectReader e(r.at("eta_schedule"), "correction.eta_schedule");
    c.eta.scale = e.get_or("scale", c.eta.scale);
    c.eta.power = e.get_or("power", c.eta.power);
    e.finish();
  }
  c.noise_scale = r.get_or("noise_scale", c.noise_scale);
  c.under_shift = r.get_or("under_shift", c.under_shift);
  if (!(c.eta.scale >= 0.0 && c.eta.scale <= 1.0)) throw ConfigError("correction: eta scale must lie in [0,1]");
  if (!(c.noise_scale >= 0.0 && c.under_shift >= 0.0)) throw ConfigError("correction: noise parameters must be non-negative");
  r.finish();
  return c;
}

inline bool is_categorical(const DataSpec& d) { return std::holds_alternative<Pmf>(d); }

}  // namespace detail

/// Parses and validates an experiment config. Unknown keys are rejected.
inline ExperimentConfig parse_config(const json& j) {
  detail::ObjectReader r(j, "config");
  ExperimentConfig cfg;
  cfg.echo = j;
  cfg.method = detail::parse_method(r.get<std::string>("method"));
  cfg.null = detail::parse_null(r.at("null"));
  if (r.has("data")) cfg.data = detail::parse_data(r.at("data"));
  if (r.has("class")) cfg.function_class = detail::parse_class(r.at("class"));
  if (r.has("alpha_grid")) cfg.alpha_grid = r.get<std::vector<double>>("alpha_grid");
  cfg.replications = r.get_or<std::size_t>("replications", cfg.replications);
  if (r.has("horizon")) cfg.horizon = r.get<std::size_t>("horizon");
  cfg.master_seed = r.get_or<std::uint64_t>("master_seed", cfg.master_seed);
  if (r.has("solver")) cfg.solver = detail::parse_solver(r.at("solver"));
  if (r.has("mixture")) {
    detail::ObjectReader mr(r.at("mixture"), "mixture");
    cfg.mixture_components = mr.get_or<std::size_t>("components", cfg.mixture_components);
    mr.finish();
  }
  if (r.has("correction")) cfg.correction = detail::parse_correction(r.at("correction"));
  cfg.workers = r.get_or<std::size_t>("workers", cfg.workers);
  if (r.has("output")) {
    detail::ObjectReader orr(r.at("output"), "output");
    if (orr.has("csv")) cfg.out_csv = orr.get<std::string>("csv");
    if (orr.has("json")) cfg.out_json = orr.get<std::string>("json");
    orr.finish();
  }
  r.finish();

  if (cfg.alpha_grid.empty()) throw ConfigError("alpha_grid must not be empty");
  for (std::size_t i = 0; i < cfg.alpha_grid.size(); ++i) {
    const double a = cfg.alpha_grid[i];
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha_grid entries must lie in (0,1)");
    if (i > 0 && !(a < cfg.alpha_grid[i - 1])) throw ConfigError("alpha_grid must be sorted in descending order");
  }
  if (cfg.replications == 0) throw ConfigError("replications must be >= 1");
  if (cfg.horizon && *cfg.horizon == 0) throw ConfigError("horizon must be >= 1");
  if (cfg.mixture_components == 0) throw ConfigError("mixture components must be >= 1");
  if (cfg.workers == 0) cfg.workers = 1;

  const bool hull = std::holds_alternative<ConvexHullNull>(cfg.null);
  const bool needs_class = cfg.method == Method::kDvBet || cfg.method == Method::kDvLogRatio ||
                           cfg.method == Method::kDvCorrected;
  if (needs_class && !cfg.function_class) throw ConfigError("method " + std::string(to_string(cfg.method)) + " needs a \"class\"");
  if (cfg.method == Method::kUi && !hull) throw ConfigError("method ui needs a convex_hull null");
  if (cfg.method == Method::kDvBet && (hull || cfg.function_class->kind != ClassSpec::Kind::kBet)) {
    throw ConfigError("method dv_bet needs a bounded_mean null and a bet class");
  }
  if (cfg.method == Method::kDvLogRatio && (!hull || cfg.function_class->kind != ClassSpec::Kind::kLogRatio)) {
    throw ConfigError("method dv_log_ratio needs a convex_hull null and a log_ratio class");
  }
  if (cfg.function_class) {
    const bool bet = cfg.function_class->kind == ClassSpec::Kind::kBet;
    if (bet == hull) throw ConfigError("bet classes pair with bounded_mean nulls, log_ratio classes with convex_hull nulls");
  }
  if (cfg.data) {
    if (detail::is_categorical(*cfg.data) != hull) {
      throw ConfigError("categorical data pairs with convex_hull nulls, [0,1] data with bounded_mean nulls");
    }
    if (hull && std::get<Pmf>(*cfg.data).size() != std::get<ConvexHullNull>(cfg.null).alphabet_size()) {
      throw DimensionError("data and null differ in alphabet size");
    }
  }
  if (cfg.method == Method::kDvCorrected) {
    const double class_factor = hull ? LogRatioClass(cfg.function_class->epsilon, std::get<ConvexHullNull>(cfg.null).alphabet_size()).max_log_factor()
                                     : BetClass(cfg.function_class->epsilon, std::get<BoundedMeanNull>(cfg.null).mu0).max_log_factor();
    const double bound = std::exp(class_factor + cfg.correction.under_shift);
    if (!std::isfinite(cfg.correction.eta.weighted_sum_bound(bound))) {
      throw ConfigError("correction: sum of eta_n * B_n diverges; use power > 1");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

/// log(1/alpha) / gamma*; nullopt when gamma* <= 0.
inline std::optional<double> lower_bound_J(double alpha, double gamma_star) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("lower_bound_J needs 0 < alpha < 1");
  if (!(gamma_star > 0.0)) return std::nullopt;
  return std::log(1.0 / alpha) / gamma_star;
}

/// Heuristic stopping-time predictor: largest root of
/// y = (log(1/alpha) + C)/gamma* + (slope/gamma*) log y. Equals J when slope = 0.
inline std::optional<double> predict_tau(double alpha, double gamma_star, double slope, double constant = 0.0) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(gamma_star > 0.0) || !(slope >= 0.0)) return std::nullopt;
  const double K = (std::log(1.0 / alpha) + constant) / gamma_star;
  if (slope == 0.0) return K > 0.0 ? std::optional<double>(K) : std::nullopt;
  return solve_largest_root({K, slope / gamma_star});
}

/// Values of gamma* at or below this are rounding noise and are reported as 0.
inline constexpr double kGammaZeroTolerance = 1e-12;

/// gamma* of the configured data against the configured null, when computable.
inline std::optional<double> gamma_star_of(const NullModel& null, const DataSpec& data) {
  double g = 0.0;
  if (const auto* hull = std::get_if<ConvexHullNull>(&null)) {
    g = kl_inf_hull(std::get<Pmf>(data), *hull).gamma_star;
  } else {
    const auto& dist = std::get<BoundedDistSpec>(data);
    if (!has_finite_support(dist)) return std::nullopt;
    g = kl_inf_bounded_mean(dist, std::get<BoundedMeanNull>(null)).gamma_star;
  }
  return g <= kGammaZeroTolerance ? 0.0 : g;
}

/// 50 x J(alpha_min, gamma*) when gamma* is computable and positive, else 1e5.
inline std::size_t default_horizon(const ExperimentConfig& cfg, std::optional<double> gamma) {
  if (cfg.horizon) return *cfg.horizon;
  if (gamma && *gamma > 0.0 && std::isfinite(*gamma)) {
    const double J = *lower_bound_J(cfg.alpha_grid.back(), *gamma);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(50.0 * J)));
  }
  return 100000;
}

/// Type-erased sequential test: consumes one observation, returns log W_n.
struct Stepper {
  std::function<double(const Observation&)> step;
  std::function<std::size_t()> solver_failures = [] { return std::size_t{0}; };
};

namespace detail {

template <typename Obs>
const Obs& expect(const Observation& x) {
  const auto* v = std::get_if<Obs>(&x);
  if (v == nullptr) {
    throw DomainError(std::is_same_v<Obs, double> ? "expected a real observation in [0,1]" : "expected a symbol observation");
  }
  return *v;
}

template <typename Process>
Stepper wrap(std::shared_ptr<Process> p) {
  using Obs = typename Process::observation_type;
  Stepper s;
  s.step = [p](const Observation& x) { return p->step(expect<Obs>(x)); };
  return s;
}

}  // namespace detail

/// Builds the configured e-process for one replication. The stream is used
/// only by methods with internal randomness (injected psi0 noise).
inline Stepper make_stepper(const ExperimentConfig& cfg, const SeededStream& stream) {
  const std::size_t refit = cfg.solver.refit_every;
  const auto schedule = cfg.solver.inverse_square_gap ? LogRatioLearner::GapSchedule::kInverseSquare
                                                      : LogRatioLearner::GapSchedule::kFixed;
  auto log_ratio_learner = [&](double eps) {
    const auto& hull = std::get<ConvexHullNull>(cfg.null);
    return LogRatioLearner(LogRatioClass(eps, hull.alphabet_size()), hull, cfg.solver.options(), schedule);
  };
  switch (cfg.method) {
    case Method::kUi: {
      auto p = std::make_shared<UiEProcess>(std::get<ConvexHullNull>(cfg.null));
      Stepper s;
      s.step = [p](const Observation& x) { return p->step(detail::expect<std::size_t>(x)); };
      return s;
    }
    case Method::kDvBet: {
      const double mu0 = std::get<BoundedMeanNull>(cfg.null).mu0;
      return detail::wrap(std::make_shared<DvEProcess<BetLearner>>(BetLearner(BetClass(cfg.function_class->epsilon, mu0)), refit));
    }
    case Method::kDvLogRatio: {
      auto p = std::make_shared<DvEProcess<LogRatioLearner>>(log_ratio_learner(cfg.function_class->epsilon), refit);
      Stepper s = detail::wrap(p);
      s.solver_failures = [p] { return p->learner().solver_failures(); };
      return s;
    }
    case Method::kDvMixture: {
      if (const auto* bm = std::get_if<BoundedMeanNull>(&cfg.null)) {
        return detail::wrap(std::make_shared<MixtureEProcess<BetLearner>>(make_bet_mixture(bm->mu0, cfg.mixture_components, refit)));
      }
      std::vector<DvEProcess<LogRatioLearner>> parts;
      for (std::size_t j = 0; j < cfg.mixture_components; ++j) {
        parts.emplace_back(log_ratio_learner(std::ldexp(1.0, -static_cast<int>(j + 1))), refit);
      }
      auto p = std::make_shared<MixtureEProcess<LogRatioLearner>>(std::move(parts));
      Stepper s = detail::wrap(p);
      s.solver_failures = [p] {
        std::size_t total = 0;
        for (const auto& c : p->components()) total += c.learner().solver_failures();
        return total;
      };
      return s;
    }
    case Method::kDvCorrected: {
      auto noise = std::make_shared<NoisyPsiEstimator>(cfg.correction.noise_scale, cfg.correction.under_shift,
                                                       stream.split(1).engine());
      const EtaSchedule eta = cfg.correction.eta;
      if (const auto* bm = std::get_if<BoundedMeanNull>(&cfg.null)) {
        BetLearner learner(BetClass(cfg.function_class->epsilon, bm->mu0));
        const double bound = std::exp(learner.max_log_factor() + cfg.correction.under_shift);
        CorrectedEProcess<BetLearner>::check_bound(learner.max_log_factor(), cfg.correction.under_shift, bound);
        auto p = std::make_shared<CorrectedEProcess<BetLearner>>(std::move(learner), refit);
        Stepper s;
        s.step = [p, noise, eta, bound](const Observation& x) {
          const std::size_t n = p->n() + 1;
          const double psi_hat = (*noise)(p->learner().psi0(), eta(n));
          return p->step(detail::expect<double>(x), psi_hat, eta(n), bound);
        };
        return s;
      }
      LogRatioLearner learner = log_ratio_learner(cfg.function_class->epsilon);
      const double bound = std::exp(learner.max_log_factor() + cfg.correction.under_shift);
      CorrectedEProcess<LogRatioLearner>::check_bound(learner.max_log_factor(), cfg.correction.under_shift, bound);
      auto p = std::make_shared<CorrectedEProcess<LogRatioLearner>>(std::move(learner), refit);
      Stepper s;
      s.step = [p, noise, eta, bound](const Observation& x) {
        const std::size_t n = p->n() + 1;
        const double psi_hat = (*noise)(p->learner().psi0(), eta(n));
        return p->step(detail::expect<std::size_t>(x), psi_hat, eta(n), bound);
      };
      s.solver_failures = [p] { return p->learner().solver_failures(); };
      return s;
    }
  }
  throw ConfigError("unsupported method");
}

/// Draws observations of the configured data distribution.
inline std::function<Observation()> make_sampler(const DataSpec& data, const SeededStream& stream) {
  if (const auto* pmf = std::get_if<Pmf>(&data)) {
    auto draw = std::make_shared<CategoricalSampler>(*pmf, stream.engine());
    return [draw] { return Observation{(*draw)()}; };
  }
  auto draw = std::make_shared<BoundedSampler>(std::get<BoundedDistSpec>(data), stream.engine());
  return [draw] { return Observation{(*draw)()}; };
}

struct ReplicationResult {
  std::vector<std::optional<std::size_t>> taus;
  bool failed = false;
  std::string diagnostic;
  std::size_t solver_failures = 0;
};

/// One wealth path, scanned against every alpha at once; stops at the
/// horizon or when the smallest alpha has crossed.
inline ReplicationResult run_replication(const ExperimentConfig& cfg, const DataSpec& data, std::size_t horizon,
                                         std::uint64_t stream_index) {
  const SeededStream stream{cfg.master_seed, stream_index};
  ReplicationResult res;
  CrossingTracker tracker(cfg.alpha_grid);
  try {
    Stepper stepper = make_stepper(cfg, stream);
    auto draw = make_sampler(data, stream);
    for (std::size_t n = 1; n <= horizon; ++n) {
      if (tracker.update(n, stepper.step(draw()))) break;
    }
    res.solver_failures = stepper.solver_failures();
  } catch (const Error& e) {
    res.failed = true;
    res.diagnostic = e.what();
  }
  res.taus = tracker.taus();
  return res;
}

/// Runs `count` work items on `workers` threads; results are stored by index.
template <typename Fn>
auto parallel_map(std::size_t count, std::size_t workers, Fn&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

struct AlphaRow {
  double alpha = 0.0;
  std::size_t replications = 0;
  std::size_t stopped = 0;
  std::size_t censored = 0;
  std::size_t failed = 0;
  std::optional<double> mean_tau;
  std::optional<double> std_tau;
  std::optional<double> se_tau;
  std::optional<double> J_alpha;
  std::optional<double> ratio;
  std::optional<double> ratio_se;
  std::string ratio_status;
  double rejection_rate = 0.0;
};

struct SimulationReport {
  std::vector<AlphaRow> rows;
  std::optional<double> gamma_star;
  std::size_t horizon = 0;
  std::size_t failed_replications = 0;
  std::size_t solver_failures = 0;
  std::vector<std::string> diagnostics;
  double wall_seconds = 0.0;
  json config_echo;
  std::size_t workers = 1;
};

/// Folds replication results in index order into per-alpha statistics.
inline SimulationReport aggregate(const ExperimentConfig& cfg, const std::vector<ReplicationResult>& results,
                                  std::optional<double> gamma, std::size_t horizon) {
  SimulationReport rep;
  rep.gamma_star = gamma;
  rep.horizon = horizon;
  rep.config_echo = cfg.echo;
  rep.workers = cfg.workers;
  for (const auto& r : results) {
    if (r.failed) {
      ++rep.failed_replications;
      if (rep.diagnostics.size() < 20) rep.diagnostics.push_back(r.diagnostic);
    }
    rep.solver_failures += r.solver_failures;
  }
  for (std::size_t a = 0; a < cfg.alpha_grid.size(); ++a) {
    AlphaRow row;
    row.alpha = cfg.alpha_grid[a];
    row.replications = results.size();
    double sum = 0.0;
    double sumsq = 0.0;
    for (const auto& r : results) {
      if (r.failed) {
        ++row.failed;
        continue;
      }
      if (const auto& tau = r.taus[a]) {
        ++row.stopped;
        const double t = static_cast<double>(*tau);
        sum += t;
        sumsq += t * t;
      } else {
        ++row.censored;
      }
    }
    if (row.stopped > 0) {
      const double k = static_cast<double>(row.stopped);
      row.mean_tau = sum / k;
      const double var = row.stopped > 1 ? std::max(0.0, (sumsq - k * *row.mean_tau * *row.mean_tau) / (k - 1.0)) : 0.0;
      row.std_tau = std::sqrt(var);
      row.se_tau = *row.std_tau / std::sqrt(k);
    }
    row.rejection_rate = static_cast<double>(row.stopped) / static_cast<double>(row.replications);
    if (gamma && *gamma > 0.0 && std::isfinite(*gamma)) row.J_alpha = lower_bound_J(row.alpha, *gamma);
    if (!gamma) row.ratio_status = "gamma_unknown";
    else if (!(*gamma > 0.0)) row.ratio_status = "gamma_nonpositive";
    else if (!std::isfinite(*gamma)) row.ratio_status = "gamma_infinite";
    else if (row.censored > 0) row.ratio_status = "censored";
    else if (row.stopped == 0) row.ratio_status = "no_stops";
    else {
      row.ratio_status = "ok";
      row.ratio = *row.mean_tau / *row.J_alpha;
      row.ratio_se = *row.se_tau / *row.J_alpha;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

/// Simulates the configured e-process under `data` (default: the config's
/// data spec). Deterministic in the master seed for any worker count.
inline SimulationReport run_simulation(const ExperimentConfig& cfg, const std::optional<DataSpec>& data_override = std::nullopt,
                                       std::uint64_t stream_offset = 0) {
  const auto start = std::chrono::steady_clock::now();
  const std::optional<DataSpec> data = data_override ? data_override : cfg.data;
  if (!data) throw ConfigError("simulation needs a \"data\" spec");
  if (detail::is_categorical(*data) != std::holds_alternative<ConvexHullNull>(cfg.null)) {
    throw ConfigError("data type does not match the null model");
  }
  const std::optional<double> gamma = gamma_star_of(cfg.null, *data);
  const std::size_t horizon = default_horizon(cfg, gamma);
  auto results = parallel_map(cfg.replications, cfg.workers, [&](std::size_t r) {
    return run_replication(cfg, *data, horizon, stream_offset + r);
  });
  SimulationReport rep = aggregate(cfg, results, gamma, horizon);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : "NA"; }

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

/// One row per alpha. Contains no timing information, so identical configs
/// give byte-identical files.
inline std::string report_csv(const SimulationReport& rep) {
  std::ostringstream out;
  out << "alpha,replications,stopped,censored,failed,mean_tau,std_tau,se_tau,J_alpha,ratio,ratio_se,ratio_status,rejection_rate\n";
  for (const auto& r : rep.rows) {
    out << detail::fmt_num(r.alpha) << ',' << r.replications << ',' << r.stopped << ',' << r.censored << ','
        << r.failed << ',' << detail::fmt_opt(r.mean_tau) << ',' << detail::fmt_opt(r.std_tau) << ','
        << detail::fmt_opt(r.se_tau) << ',' << detail::fmt_opt(r.J_alpha) << ',' << detail::fmt_opt(r.ratio) << ','
        << detail::fmt_opt(r.ratio_se) << ',' << r.ratio_status << ',' << detail::fmt_num(r.rejection_rate) << '\n';
  }
  return out.str();
}

inline json environment_fingerprint(std::size_t workers) {
  return {{"compiler", __VERSION__},
          {"cplusplus", static_cast<long>(__cplusplus)},
          {"hardware_concurrency", std::thread::hardware_concurrency()},
          {"workers", workers}};
}

inline json report_json(const SimulationReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"alpha", r.alpha},
                    {"replications", r.replications},
                    {"stopped", r.stopped},
                    {"censored", r.censored},
                    {"failed", r.failed},
                    {"mean_tau", detail::opt_json(r.mean_tau)},
                    {"std_tau", detail::opt_json(r.std_tau)},
                    {"se_tau", detail::opt_json(r.se_tau)},
                    {"J_alpha", detail::opt_json(r.J_alpha)},
                    {"ratio", detail::opt_json(r.ratio)},
                    {"ratio_se", detail::opt_json(r.ratio_se)},
                    {"ratio_status", r.ratio_status},
                    {"rejection_rate", r.rejection_rate}});
  }
  return {{"config", rep.config_echo},
          {"gamma_star", detail::opt_json(rep.gamma_star)},
          {"horizon", rep.horizon},
          {"failed_replications", rep.failed_replications},
          {"solver_failures", rep.solver_failures},
          {"diagnostics", rep.diagnostics},
          {"wall_seconds", rep.wall_seconds},
          {"environment", environment_fingerprint(rep.workers)},
          {"rows", rows}};
}

struct Type1Row {
  std::string scenario;
  double alpha = 0.0;
  std::size_t replications = 0;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;
  /// alpha + 3 sqrt(alpha (1 - alpha) / R).
  double bound = 0.0;
  bool within_bound = false;
};

/// Null scenarios for type-I checks: every hull vertex, or Bernoulli(mu0)
/// plus the configured data when it has mean mu0.
inline std::vector<std::pair<std::string, DataSpec>> null_scenarios(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, DataSpec>> out;
  if (const auto* hull = std::get_if<ConvexHullNull>(&cfg.null)) {
    for (std::size_t k = 0; k < hull->num_vertices(); ++k) out.emplace_back("vertex_" + std::to_string(k), hull->vertex(k));
    return out;
  }
  const double mu0 = std::get<BoundedMeanNull>(cfg.null).mu0;
  out.emplace_back("bernoulli_mu0", BoundedDistSpec{Bernoulli{mu0}});
  if (cfg.data) {
    const auto& d = std::get<BoundedDistSpec>(*cfg.data);
    if (std::abs(mean_of(d) - mu0) < 1e-12) out.emplace_back("config_data", d);
  }
  return out;
}

/// Horizon for type-I runs: the configured horizon, else 1e5.
inline std::vector<Type1Row> validate_type1(const ExperimentConfig& cfg) {
  ExperimentConfig run = cfg;
  if (!run.horizon) run.horizon = 100000;
  std::vector<Type1Row> rows;
  std::uint64_t offset = 0;
  for (const auto& [name, data] : null_scenarios(run)) {
    const SimulationReport rep = run_simulation(run, data, offset);
    offset += run.replications;
    for (const auto& r : rep.rows) {
      Type1Row t;
      t.scenario = name;
      t.alpha = r.alpha;
      t.replications = r.replications;
      t.rejections = r.stopped;
      t.rejection_rate = r.rejection_rate;
      t.bound = r.alpha + 3.0 * std::sqrt(r.alpha * (1.0 - r.alpha) / static_cast<double>(r.replications));
      t.within_bound = t.rejection_rate <= t.bound;
      rows.push_back(t);
    }
  }
  return rows;
}

inline json type1_json(const std::vector<Type1Row>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"scenario", r.scenario},
                   {"alpha", r.alpha},
                   {"replications", r.replications},
                   {"rejections", r.rejections},
                   {"rejection_rate", r.rejection_rate},
                   {"bound", r.bound},
                   {"within_bound", r.within_bound}});
  }
  return out;
}

struct StreamOptions {
  double alpha = 0.05;
  bool continue_on_error = false;
};

struct StreamResult {
  std::size_t lines_read = 0;
  std::size_t emitted = 0;
  std::size_t parse_errors = 0;
  bool aborted = false;
};

/// Reads one observation per line and writes one JSON object per processed
/// observation. The crossed flag is sticky: once log W_n >= log(1/alpha) the
/// decision is final. Blank lines are skipped.
inline StreamResult run_stream(const ExperimentConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err,
                               const StreamOptions& opts) {
  const double threshold = log_threshold(opts.alpha);
  const bool symbols = std::holds_alternative<ConvexHullNull>(cfg.null);
  Stepper stepper = make_stepper(cfg, SeededStream{cfg.master_seed, 0});
  StreamResult res;
  bool crossed = false;
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++res.lines_read;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    Observation obs;
    try {
      std::size_t used = 0;
      if (symbols) {
        if (token.front() == '-') throw std::invalid_argument("negative symbol");
        const unsigned long long v = std::stoull(token, &used);
        obs = static_cast<std::size_t>(v);
      } else {
        obs = std::stod(token, &used);
      }
      if (used != token.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      ++res.parse_errors;
      err << "line " << res.lines_read << ": cannot parse \"" << token << "\" as "
          << (symbols ? "a non-negative integer symbol" : "a real observation") << '\n';
      if (opts.continue_on_error) continue;
      res.aborted = true;
      return res;
    }
    double lw = 0.0;
    try {
      lw = stepper.step(obs);
    } catch (const DomainError& e) {
      ++res.parse_errors;
      err << "line " << res.lines_read << ": " << e.what() << '\n';
      if (opts.continue_on_error) continue;
      res.aborted = true;
      return res;
    }
    ++n;
    crossed = crossed || lw >= threshold;
    json row = {{"n", n},
                {"log_wealth", std::isfinite(lw) ? json(lw) : json(nullptr)},
                {"e_value_threshold_crossed", crossed},
                {"stopped", crossed}};
    out << row.dump() << '\n';
    ++res.emitted;
  }
  return res;
}

struct RegretSweepResult {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t sequences = 0;
  double max_regret = -kInf;
  /// max over sequences and prefixes of regret - ((m-1)/2 log n + m).
  double max_excess = -kInf;
  std::size_t violations = 0;
};

/// Realized KT regret along random sequences, checked at every prefix
/// against (m-1)/2 log n + m. Sequence s draws from a Dirichlet(1/2) pmf;
/// every fifth sequence repeats a single symbol, the worst case for KT.
inline RegretSweepResult regret_sweep(std::size_t m, std::size_t n, std::size_t sequences, std::uint64_t seed) {
  if (m < 2 || n < 1 || sequences < 1) throw ConfigError("regret sweep needs m >= 2, n >= 1, sequences >= 1");
  RegretSweepResult res{m, n, sequences};
  for (std::size_t s = 0; s < sequences; ++s) {
    const SeededStream stream{seed, s};
    std::vector<double> probs(m, 0.0);
    if (s % 5 == 4) {
      probs[s % m] = 1.0;
    } else {
      auto eng = stream.split(7).engine();
      std::gamma_distribution<double> g(0.5, 1.0);
      double total = 0.0;
      for (auto& p : probs) total += (p = g(eng) + 1e-12);
      for (auto& p : probs) p /= total;
    }
    CategoricalSampler draw(Pmf(probs), stream.engine());
    KtState kt(m);
    for (std::size_t i = 1; i <= n; ++i) {
      kt.observe(draw());
      const double regret = kt_regret(kt);
      const double envelope = 0.5 * static_cast<double>(m - 1) * std::log(static_cast<double>(i)) + static_cast<double>(m);
      res.max_regret = std::max(res.max_regret, regret);
      res.max_excess = std::max(res.max_excess, regret - envelope);
      if (regret > envelope) ++res.violations;
    }
  }
  return res;
}

}  // namespace seqtest::harness

#endif  // SEQTEST_HARNESS_HPP
