#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "seqtest/harness.hpp"

using namespace seqtest;
using namespace seqtest::harness;

namespace {

ExperimentConfig parse(const std::string& text) { return parse_config(json::parse(text)); }

const char* kUiConfig = R"({
  "method": "ui",
  "null": {"type": "convex_hull", "vertices": [[0.3333333333333333, 0.3333333333333333, 0.3333333333333334]]},
  "data": {"type": "categorical", "probs": [0.6, 0.3, 0.1]},
  "alpha_grid": [0.1, 0.01],
  "replications": 40,
  "master_seed": 99
})";

const char* kBetConfig = R"({
  "method": "dv_bet",
  "null": {"type": "bounded_mean", "mu0": 0.5},
  "data": {"type": "bernoulli", "p": 0.7},
  "class": {"class": "bet", "epsilon": 0.2},
  "alpha_grid": [0.05],
  "replications": 30,
  "master_seed": 4
})";

std::string with(const std::string& base, const std::string& key_value) {
  // Overrides (or adds) top-level entries of a config.
  json j = json::parse(base);
  j.update(json::parse("{" + key_value + "}"));
  return j.dump();
}

}  // namespace

TEST(Config, ParsesAndEchoes) {
  const auto cfg = parse(kUiConfig);
  EXPECT_EQ(cfg.method, Method::kUi);
  EXPECT_EQ(cfg.replications, 40u);
  EXPECT_EQ(cfg.alpha_grid.size(), 2u);
  EXPECT_EQ(cfg.echo["master_seed"], 99);
  const auto b = parse(kBetConfig);
  EXPECT_EQ(b.function_class->kind, ClassSpec::Kind::kBet);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse(with(kUiConfig, R"("replicates": 3)")), ConfigError);
  EXPECT_THROW(parse(with(kBetConfig, R"("solver": {"gap_tol": 1e-8, "tolerance": 1})")), ConfigError);
}

TEST(Config, ValidatesGridAndPairings) {
  EXPECT_THROW(parse(with(kUiConfig, R"("alpha_grid": [0.01, 0.1])")), ConfigError);
  EXPECT_THROW(parse(with(kUiConfig, R"("alpha_grid": [1.5])")), ConfigError);
  EXPECT_THROW(parse(with(kUiConfig, R"("replications": 0)")), ConfigError);
  EXPECT_THROW(parse(with(kUiConfig, R"("horizon": 0)")), ConfigError);
  EXPECT_THROW(parse(with(kUiConfig, R"("class": {"class": "bet", "epsilon": 0.2})")), ConfigError);
  EXPECT_THROW(parse(R"({"method": "dv_bet", "null": {"type": "bounded_mean", "mu0": 0.5}})"), ConfigError);
  EXPECT_THROW(parse(R"({"method": "ui", "null": {"type": "bounded_mean", "mu0": 0.5}})"), ConfigError);
  EXPECT_THROW(parse(R"({"method": "ui", "null": {"type": "convex_hull", "vertices": [[0.5, 0.5]]},
                         "data": {"type": "categorical", "probs": [0.2, 0.3, 0.5]}})"),
               DimensionError);
  EXPECT_THROW(parse(R"({"method": "dv_corrected", "null": {"type": "bounded_mean", "mu0": 0.5},
                         "class": {"class": "bet", "epsilon": 0.2},
                         "correction": {"eta_schedule": {"scale": 1.0, "power": 1.0}}})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"method": "teleport", "null": {"type": "bounded_mean", "mu0": 0.5}})"), ConfigError);
}

TEST(LowerBound, KnownValues) {
  EXPECT_NEAR(*lower_bound_J(0.01, 0.2), 23.025850929940457, 1e-12);
  EXPECT_NEAR(*lower_bound_J(0.01, 0.08228287850505178), 55.96753868674339, 1e-9);
  EXPECT_NEAR(*lower_bound_J(0.001, 0.08228287850505178), 83.95130803011507, 1e-9);
  EXPECT_LT(*lower_bound_J(0.999999, 0.2), 1e-5);
  EXPECT_FALSE(lower_bound_J(0.01, 0.0));
}

TEST(PredictTau, FixedPointAndJLimit) {
  EXPECT_NEAR(*predict_tau(0.01, 0.2, 0.0), *lower_bound_J(0.01, 0.2), 1e-12);
  const double y = *predict_tau(0.01, 0.2, 1.0);
  EXPECT_NEAR(y, 41.67540688991254, 1e-8);
  EXPECT_GE(y, *lower_bound_J(0.01, 0.2));
  EXPECT_FALSE(predict_tau(0.5, 0.2, 50.0));
}

TEST(Simulation, DeterministicAcrossWorkerCounts) {
  auto cfg = parse(kUiConfig);
  cfg.workers = 1;
  const std::string one = report_csv(run_simulation(cfg));
  cfg.workers = 4;
  const std::string four = report_csv(run_simulation(cfg));
  EXPECT_EQ(one, four);
  cfg.master_seed = 100;
  EXPECT_NE(one, report_csv(run_simulation(cfg)));
}

TEST(Simulation, ReportFieldsAreConsistent) {
  const auto rep = run_simulation(parse(kBetConfig));
  ASSERT_EQ(rep.rows.size(), 1u);
  const auto& r = rep.rows[0];
  EXPECT_EQ(r.stopped + r.censored + r.failed, r.replications);
  EXPECT_NEAR(*rep.gamma_star, 0.08228287850505178, 1e-10);
  EXPECT_NEAR(*r.J_alpha, std::log(20.0) / *rep.gamma_star, 1e-9);
  EXPECT_EQ(r.ratio_status, "ok");
  EXPECT_NEAR(*r.ratio, *r.mean_tau / *r.J_alpha, 1e-12);
  EXPECT_EQ(rep.horizon, static_cast<std::size_t>(std::ceil(50.0 * *r.J_alpha)));
}

TEST(Simulation, NullDataFlagsRatioAndCensors) {
  auto cfg = parse(R"({
    "method": "dv_bet",
    "null": {"type": "bounded_mean", "mu0": 0.5},
    "data": {"type": "bernoulli", "p": 0.5},
    "class": {"class": "bet", "epsilon": 0.2},
    "alpha_grid": [0.05],
    "replications": 20,
    "horizon": 300,
    "master_seed": 1
  })");
  const auto rep = run_simulation(cfg);
  EXPECT_EQ(rep.horizon, 300u);
  EXPECT_NEAR(*rep.gamma_star, 0.0, 1e-12);
  EXPECT_EQ(rep.rows[0].ratio_status, "gamma_nonpositive");
  EXPECT_FALSE(rep.rows[0].ratio);
  EXPECT_GT(rep.rows[0].censored, 0u);
  const std::string csv = report_csv(rep);
  EXPECT_NE(csv.find("NA"), std::string::npos);
}

TEST(Simulation, CensoringIsReportedNotImputed) {
  auto cfg = parse(kUiConfig);
  cfg.horizon = 5;
  const auto rep = run_simulation(cfg);
  for (const auto& r : rep.rows) {
    EXPECT_GT(r.censored, 0u);
    EXPECT_EQ(r.ratio_status, "censored");
    if (r.mean_tau) {
      EXPECT_LE(*r.mean_tau, 5.0);
    }
  }
}

TEST(Simulation, EveryMethodRuns) {
  for (const char* text : {
           R"({"method": "dv_log_ratio", "null": {"type": "convex_hull", "vertices": [[0.5, 0.3, 0.2], [0.2, 0.3, 0.5]]},
               "data": {"type": "categorical", "probs": [0.1, 0.2, 0.7]}, "class": {"class": "log_ratio", "epsilon": 0.1},
               "alpha_grid": [0.1], "replications": 4, "master_seed": 2})",
           R"({"method": "dv_mixture", "null": {"type": "bounded_mean", "mu0": 0.4},
               "data": {"type": "beta", "a": 3.0, "b": 2.0}, "alpha_grid": [0.05], "replications": 4})",
           R"({"method": "dv_mixture", "null": {"type": "convex_hull", "vertices": [[0.5, 0.5]]},
               "data": {"type": "categorical", "probs": [0.9, 0.1]}, "alpha_grid": [0.05], "replications": 2,
               "mixture": {"components": 3}})",
           R"({"method": "dv_corrected", "null": {"type": "bounded_mean", "mu0": 0.5},
               "data": {"type": "discrete", "atoms": [0.0, 1.0], "weights": [0.2, 0.8]}, "class": {"class": "bet", "epsilon": 0.2},
               "alpha_grid": [0.05], "replications": 4})",
           R"({"method": "dv_corrected", "null": {"type": "convex_hull", "vertices": [[0.5, 0.5]]},
               "data": {"type": "categorical", "probs": [0.9, 0.1]}, "class": {"class": "log_ratio", "epsilon": 0.2},
               "alpha_grid": [0.05], "replications": 4})"}) {
    const auto rep = run_simulation(parse(text));
    EXPECT_EQ(rep.failed_replications, 0u) << text;
    EXPECT_EQ(rep.rows[0].stopped, rep.rows[0].replications) << text;
  }
}

TEST(Type1, VertexScenariosWithinBound) {
  auto cfg = parse(R"({"method": "ui", "null": {"type": "convex_hull", "vertices": [[0.5, 0.3, 0.2], [0.2, 0.3, 0.5]]},
                       "alpha_grid": [0.1], "replications": 200, "horizon": 500, "master_seed": 3})");
  const auto rows = validate_type1(cfg);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.within_bound) << r.scenario;
    EXPECT_NEAR(r.bound, 0.1 + 3 * std::sqrt(0.09 / 200), 1e-15);
  }
}

TEST(Stream, UiExampleCrossesAtTwo) {
  auto cfg = parse(R"({"method": "ui", "null": {"type": "convex_hull", "vertices": [[0.5, 0.5]]}})");
  std::istringstream in("0\n0\n");
  std::ostringstream out, err;
  const auto res = run_stream(cfg, in, out, err, {1.0, false});
  EXPECT_EQ(res.emitted, 2u);
  std::istringstream lines(out.str());
  std::string l1, l2;
  std::getline(lines, l1);
  std::getline(lines, l2);
  const auto j1 = json::parse(l1), j2 = json::parse(l2);
  EXPECT_EQ(j1["n"], 1);
  EXPECT_EQ(j1["e_value_threshold_crossed"], true);  // log W_1 = 0 >= log(1/1)
  EXPECT_NEAR(j2["log_wealth"].get<double>(), std::log(1.5), 1e-15);
  EXPECT_EQ(j2["e_value_threshold_crossed"], true);
}

TEST(Stream, EmptyInputAndStickyCrossing) {
  auto cfg = parse(R"({"method": "dv_bet", "null": {"type": "bounded_mean", "mu0": 0.5}, "class": {"class": "bet", "epsilon": 0.2}})");
  {
    std::istringstream in("");
    std::ostringstream out, err;
    EXPECT_EQ(run_stream(cfg, in, out, err, {0.5, false}).emitted, 0u);
    EXPECT_TRUE(out.str().empty());
  }
  std::string data;
  for (int i = 0; i < 20; ++i) data += "1\n";
  for (int i = 0; i < 40; ++i) data += "0\n";
  std::istringstream in(data);
  std::ostringstream out, err;
  run_stream(cfg, in, out, err, {0.5, false});
  std::istringstream lines(out.str());
  std::string line;
  bool seen = false;
  bool dipped = false;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    if (seen) {
      EXPECT_TRUE(j["e_value_threshold_crossed"].get<bool>());
    }
    seen = seen || j["e_value_threshold_crossed"].get<bool>();
    if (seen && j["log_wealth"].get<double>() < std::log(2.0)) dipped = true;
  }
  EXPECT_TRUE(seen);
  EXPECT_TRUE(dipped);
}

TEST(Stream, ParseErrorsAbortOrContinue) {
  auto cfg = parse(R"({"method": "ui", "null": {"type": "convex_hull", "vertices": [[0.5, 0.5]]}})");
  {
    std::istringstream in("0\nabc\n1\n");
    std::ostringstream out, err;
    const auto res = run_stream(cfg, in, out, err, {0.05, false});
    EXPECT_TRUE(res.aborted);
    EXPECT_EQ(res.emitted, 1u);
    EXPECT_NE(err.str().find("line 2"), std::string::npos);
  }
  {
    std::istringstream in("0\nabc\n\n7\n-1\n1\n");
    std::ostringstream out, err;
    const auto res = run_stream(cfg, in, out, err, {0.05, true});
    EXPECT_FALSE(res.aborted);
    EXPECT_EQ(res.emitted, 2u);
    EXPECT_EQ(res.parse_errors, 3u);
  }
}

TEST(RegretSweep, WithinEnvelope) {
  const auto r = regret_sweep(3, 2000, 10, 5);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LT(r.max_excess, 0.0);
  EXPECT_GT(r.max_regret, 0.0);
}
