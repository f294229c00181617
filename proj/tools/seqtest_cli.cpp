// Command-line front end for the simulation harness.
//
// Exit codes: 0 success, 2 config error, 3 solver failure, 4 runtime data error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqtest/harness.hpp"

namespace {

using seqtest::harness::ExperimentConfig;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitData = 4;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw seqtest::ConfigError("cannot write " + path);
  out << text;
}

std::string sidecar_path(const std::string& csv) {
  const auto dot = csv.rfind('.');
  const auto slash = csv.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? csv.substr(0, dot) : csv) + ".json";
}

int cmd_simulate(ExperimentConfig cfg, const std::optional<std::string>& out, std::optional<std::size_t> workers) {
  if (workers) cfg.workers = *workers;
  if (out) cfg.out_csv = *out;
  const auto rep = seqtest::harness::run_simulation(cfg);
  const std::string csv = seqtest::harness::report_csv(rep);
  const json meta = seqtest::harness::report_json(rep);
  if (cfg.out_csv) {
    write_file(*cfg.out_csv, csv);
    write_file(cfg.out_json.value_or(sidecar_path(*cfg.out_csv)), meta.dump(2) + "\n");
  } else {
    std::cout << csv;
    if (cfg.out_json) write_file(*cfg.out_json, meta.dump(2) + "\n");
  }
  for (const auto& d : rep.diagnostics) std::cerr << "replication failed: " << d << '\n';
  if (rep.solver_failures > 0) std::cerr << "saddle solver failed to certify " << rep.solver_failures << " refits\n";
  return rep.failed_replications > 0 ? kExitData : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential anytime-valid tests: simulation and streaming"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  double alpha = 0.05;
  bool continue_on_error = false;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo stopping times over the config's alpha grid");
  simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--out", out, "CSV output path; a JSON sidecar is written next to it");
  simulate->add_option("--workers", workers, "Worker threads");

  auto* run = app.add_subcommand("run", "Stream observations from stdin, one JSON decision per line");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--alpha", alpha, "Level of the test")->check(CLI::Range(0.0, 1.0));
  run->add_flag("--continue-on-error", continue_on_error, "Skip malformed lines instead of aborting");

  auto* type1 = app.add_subcommand("validate-type1", "Rejection rates when the data come from the null");
  type1->add_option("--config", config_path, "Experiment config (JSON)")->required();
  type1->add_option("--workers", workers, "Worker threads");
  type1->add_option("--out", out, "Write the JSON report here instead of stdout");

  auto* klinf = app.add_subcommand("klinf", "gamma* of the config's data against its null");
  klinf->add_option("--config", config_path, "Experiment config (JSON)")->required();

  std::size_t m = 3;
  std::size_t n = 10000;
  std::size_t sequences = 100;
  std::uint64_t seed = 0;
  auto* regret = app.add_subcommand("regret-sweep", "Realized KT regret against (m-1)/2 log n + m");
  regret->add_option("--m", m, "Alphabet size")->check(CLI::PositiveNumber);
  regret->add_option("--n", n, "Sequence length")->check(CLI::PositiveNumber);
  regret->add_option("--sequences", sequences, "Number of sequences")->check(CLI::PositiveNumber);
  regret->add_option("--seed", seed, "Master seed");

  double gamma = 0.0;
  double slope = 0.0;
  double constant = 0.0;
  auto* predict = app.add_subcommand("predict", "Predicted stopping time from the fixed-point heuristic");
  predict->add_option("--alpha", alpha, "Level")->required();
  predict->add_option("--gamma", gamma, "gamma*")->required();
  predict->add_option("--slope", slope, "Regret slope (0 gives J)");
  predict->add_option("--constant", constant, "Regret constant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(seqtest::harness::load_config(config_path), out, workers);

    if (*run) {
      const auto cfg = seqtest::harness::load_config(config_path);
      seqtest::harness::StreamOptions opts;
      opts.alpha = alpha;
      opts.continue_on_error = continue_on_error;
      const auto res = seqtest::harness::run_stream(cfg, std::cin, std::cout, std::cerr, opts);
      return res.aborted ? kExitData : 0;
    }

    if (*type1) {
      auto cfg = seqtest::harness::load_config(config_path);
      if (workers) cfg.workers = *workers;
      const auto rows = seqtest::harness::validate_type1(cfg);
      bool ok = true;
      for (const auto& r : rows) ok = ok && r.within_bound;
      const json report = {{"rows", seqtest::harness::type1_json(rows)}, {"all_within_bound", ok}};
      if (out) write_file(*out, report.dump(2) + "\n");
      else std::cout << report.dump(2) << '\n';
      return 0;
    }

    if (*klinf) {
      const auto cfg = seqtest::harness::load_config(config_path);
      if (!cfg.data) throw seqtest::ConfigError("klinf needs a \"data\" spec");
      const auto g = seqtest::harness::gamma_star_of(cfg.null, *cfg.data);
      json report = {{"gamma_star", g ? json(*g) : json(nullptr)}};
      if (!g) report["note"] = "gamma* is only computed for finitely supported data";
      else if (!std::isfinite(*g)) report["gamma_star"] = "inf";
      std::cout << report.dump(2) << '\n';
      return 0;
    }

    if (*regret) {
      const auto r = seqtest::harness::regret_sweep(m, n, sequences, seed);
      const json report = {{"m", r.m},
                           {"n", r.n},
                           {"sequences", r.sequences},
                           {"max_regret", r.max_regret},
                           {"max_excess_over_envelope", r.max_excess},
                           {"violations", r.violations}};
      std::cout << report.dump(2) << '\n';
      return 0;
    }

    if (*predict) {
      const auto tau = seqtest::harness::predict_tau(alpha, gamma, slope, constant);
      if (!tau) {
        std::cerr << "predictor not applicable for these inputs\n";
        return kExitConfig;
      }
      std::printf("%.12g\n", *tau);
      return 0;
    }
  } catch (const seqtest::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const seqtest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const seqtest::DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const seqtest::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
