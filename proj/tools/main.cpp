// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

// fedgraph: generate synthetic data, train, evaluate and compare federated
// traffic forecasters.
//
// Exit codes: 0 success, 1 usage/config/IO error, 2 numeric divergence.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "app/commands.hpp"
#include "fedgraph/errors.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fedgraph;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

struct TrainFlags {
  std::string config;
  std::string replay;
  std::string out;
  std::optional<std::string> mode;
  std::optional<std::string> aggregator;
  std::optional<int> hops;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> rounds;
  std::optional<int> epochs;
  bool dump_params = false;
};

void apply_overrides(app::AppConfig& c, const TrainFlags& f) {
  if (f.mode) c.fed.mode = parse_run_mode(*f.mode);
  if (f.aggregator) c.fed.aggregator.kind = parse_aggregator_kind(*f.aggregator);
  if (f.hops) c.fed.aggregator.hops = *f.hops;
  if (f.alpha) c.fed.aggregator.alpha = *f.alpha;
  if (f.seed) c.fed.seed = *f.seed;
  if (f.workers) c.fed.workers = *f.workers;
  if (f.rounds) c.fed.rounds = *f.rounds;
  if (f.epochs) c.fed.local_epochs = *f.epochs;
  if (f.dump_params) c.dump_params = true;
  if (!f.out.empty()) c.out_dir = f.out;
  c.fed.validate();
}

std::string metric_line(const MetricReport& m) {
  if (!m.defined()) return "undefined (no observed targets)";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << "MAE " << m.mae << "  MAPE " << m.mape
    << "%  RMSE " << m.rmse << "  (n=" << m.n_evaluated << ")";
  return s.str();
}

int run_generate(const app::GenerateOptions& o) {
  const auto s = app::cmd_generate(o);
  std::cout << "wrote " << s.series.string() << " (" << s.n_nodes << " nodes, " << s.n_steps
            << " steps, " << s.n_missing << " missing)\n"
            << "wrote " << s.graph.string() << " (" << s.n_edges << " directed edges)\n"
            << "wrote " << s.config.string() << "\n";
  return kExitOk;
}

int run_train(const TrainFlags& f) {
  app::AppConfig c;
  if (!f.replay.empty()) {
    c = app::load_manifest(f.replay);
    if (f.out.empty()) c.out_dir = fs::path(f.replay).parent_path() / "replay";
  } else {
    c = app::load_config(f.config);
  }
  apply_overrides(c, f);
  const auto outcome = app::cmd_train(c);
  const auto& fin = outcome.result.final;
  for (const auto& r : outcome.result.rounds) {
    std::cout << "round " << r.round << "  train_loss " << r.train_loss << "  val "
              << metric_line(r.val) << '\n';
  }
  std::cout << "final test  " << metric_line(fin.last.test) << '\n'
            << "best val round " << fin.best_val_round << ", test  "
            << metric_line(fin.best_val_test) << '\n'
            << "config hash " << outcome.config_hash << ", outputs in "
            << outcome.out_dir.string() << '\n';
  return kExitOk;
}

int run_evaluate(const std::string& config, std::string checkpoints, const std::string& split,
                 bool by_horizon) {
  const app::AppConfig c = app::load_config(config);
  if (checkpoints.empty()) checkpoints = (c.out_dir / "checkpoints" / "final").string();
  const auto r = app::cmd_evaluate(c, checkpoints, app::parse_eval_split(split));
  std::cout << split << "  " << metric_line(r.overall) << "  [" << r.n_models << " model"
            << (r.n_models == 1 ? "" : "s") << "]\n";
  if (by_horizon) {
    for (std::size_t k = 0; k < r.by_horizon.size(); ++k) {
      std::cout << "  step " << std::setw(2) << k + 1 << "  " << metric_line(r.by_horizon[k])
                << '\n';
    }
  }
  return kExitOk;
}

int run_compare(const std::string& config, const std::string& methods,
                const std::vector<std::uint64_t>& seeds, const std::string& csv,
                std::optional<int> workers) {
  app::AppConfig c = app::load_config(config);
  if (workers) c.fed.workers = *workers;
  const auto entries = app::parse_compare_entries(methods, c.fed.aggregator);
  const auto rows = app::cmd_compare(c, entries, seeds);
  app::print_compare(std::cout, rows);
  if (!csv.empty()) app::write_compare_csv(csv, rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Federated graph-aware traffic forecasting simulator"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", std::string(app::kToolVersion));

  app::GenerateOptions gen;
  auto* generate = cli.add_subcommand("generate", "Write a synthetic series, graph and config");
  generate->add_option("--nodes", gen.nodes, "Number of sensors")->check(CLI::PositiveNumber);
  generate->add_option("--steps", gen.steps, "Number of 5-minute steps")->check(CLI::PositiveNumber);
  generate->add_option("--graph", gen.graph, "ring, path, grid, complete or er")
      ->check(CLI::IsMember({"ring", "path", "grid", "complete", "er"}));
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--missing-rate", gen.missing_rate, "Fraction of missing readings")
      ->check(CLI::Range(0.0, 0.999999));
  generate->add_option("--edge-prob", gen.edge_prob, "Edge probability for er graphs")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--grid-cols", gen.grid_cols, "Columns for grid graphs");
  generate->add_option("--out", gen.out_dir, "Output directory")->required();

  TrainFlags tf;
  auto* train = cli.add_subcommand("train", "Run one experiment from a config");
  auto* config_opt = train->add_option("config", tf.config, "Config file (JSON)");
  auto* replay_opt = train->add_option("--replay", tf.replay, "Re-run a manifest.json");
  config_opt->excludes(replay_opt);
  train->add_option("--out", tf.out, "Override output.dir");
  train->add_option("--mode", tf.mode, "federated, centralized or local");
  train->add_option("--aggregator", tf.aggregator, "fedavg, graphfedavg or mpfedavg");
  train->add_option("--hops", tf.hops, "Aggregation hops L");
  train->add_option("--alpha", tf.alpha, "MPFedAvg blend weight");
  train->add_option("--seed", tf.seed, "Global seed");
  train->add_option("--workers", tf.workers, "Client worker threads");
  train->add_option("--rounds", tf.rounds, "Communication rounds");
  train->add_option("--epochs", tf.epochs, "Local epochs per round");
  train->add_flag("--dump-params", tf.dump_params, "Write X before/after each aggregation");

  std::string eval_config;
  std::string eval_ckpt;
  std::string eval_split = "test";
  bool eval_horizon = false;
  auto* evaluate = cli.add_subcommand("evaluate", "Recompute metrics from checkpoints");
  evaluate->add_option("config", eval_config, "Config file (JSON)")->required();
  evaluate->add_option("--checkpoints", eval_ckpt,
                       "Checkpoint directory (default: <output.dir>/checkpoints/final)");
  evaluate->add_option("--split", eval_split, "val or test")
      ->check(CLI::IsMember({"val", "test"}));
  evaluate->add_flag("--by-horizon", eval_horizon, "Also print per-step metrics");

  std::string cmp_config;
  std::string cmp_methods = "local,centralized,fedavg,graphfedavg,mpfedavg";
  std::vector<std::uint64_t> cmp_seeds{0};
  std::string cmp_csv;
  std::optional<int> cmp_workers;
  auto* compare = cli.add_subcommand("compare", "Table of final test metrics per method");
  compare->add_option("config", cmp_config, "Config file (JSON)")->required();
  compare->add_option("--methods", cmp_methods,
                      "Comma list: local, centralized, fedavg, graphfedavg[:L], mpfedavg[:L]");
  compare->add_option("--seeds", cmp_seeds, "Seeds to average over")->delimiter(',');
  compare->add_option("--csv", cmp_csv, "Write per-seed metrics as CSV");
  compare->add_option("--workers", cmp_workers, "Client worker threads");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train) {
      if (tf.config.empty() && tf.replay.empty()) {
        std::cerr << "train: give a config file or --replay <manifest>\n";
        return kExitError;
      }
      return run_train(tf);
    }
    if (*evaluate) return run_evaluate(eval_config, eval_ckpt, eval_split, eval_horizon);
    if (*compare) return run_compare(cmp_config, cmp_methods, cmp_seeds, cmp_csv, cmp_workers);
  } catch (const DivergedError& e) {
    std::cerr << "error: training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
