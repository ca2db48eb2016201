// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "app/commands.hpp"
#include "app/config.hpp"
#include "fedgraph/digest.hpp"
#include "fedgraph/errors.hpp"

namespace fedgraph::app {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Fresh directory with a generated 4-node ring and a small config.
class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fedgraph_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    GenerateOptions g;
    g.nodes = 4;
    g.steps = 300;
    g.missing_rate = 0.05;
    g.out_dir = dir_;
    cmd_generate(g);
    spit(dir_ / "config.json", small_config("graphfedavg"));
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string small_config(const std::string& kind, const std::string& extra_training = "") {
    return R"({
  "schema_version": 1,
  "dataset": {"series": "series.csv", "graph": "graph.csv", "stride": 4},
  "model": {"hidden_dim": 6, "num_layers": 1, "input_len": 6, "output_len": 6},
  "training": {"rounds": 2, "local_epochs": 1, "batch_size": 16, "seed": 1)" +
           extra_training + R"(},
  "aggregator": {"kind": ")" + kind + R"(", "hops": 1},
  "output": {"dir": "run"}
})";
  }

  AppConfig config() const { return load_config(dir_ / "config.json"); }

  fs::path dir_;
};

// ---- config parsing ---------------------------------------------------------

TEST(ParseConfig, MinimalConfigGetsDefaults) {
  const AppConfig c = parse_config(R"({"schema_version": 1, "dataset": {"series": "s.csv"}})", "/data");
  EXPECT_EQ(c.series, fs::path("/data/s.csv"));
  EXPECT_FALSE(c.graph.has_value());
  EXPECT_TRUE(c.symmetrize);
  EXPECT_EQ(c.fed.arch.hidden_dim, 100);
  EXPECT_EQ(c.fed.rounds, 5);
  EXPECT_EQ(c.fed.local_epochs, 3);
  EXPECT_EQ(c.out_dir, fs::path("/data/runs/latest"));
}

TEST(ParseConfig, ReadsEverySection) {
  const AppConfig c = parse_config(R"({
    "schema_version": 1,
    "dataset": {"series": "/abs/s.csv", "graph": "g.csv", "symmetrize": false,
                "split": [0.6, 0.2, 0.2], "split_convention": "windows", "stride": 2},
    "model": {"hidden_dim": 16, "num_layers": 1, "input_len": 6, "output_len": 3},
    "training": {"mode": "local", "rounds": 7, "local_epochs": 2, "batch_size": 32,
                 "lr": 0.01, "clip_norm": 5.0, "seed": 9, "workers": 3},
    "aggregator": {"kind": "mpfedavg", "hops": 2, "alpha": 0.5},
    "output": {"dir": "out", "checkpoint_every": 2, "dump_params": true}
  })", "/base");
  EXPECT_EQ(c.series, fs::path("/abs/s.csv"));
  EXPECT_EQ(*c.graph, fs::path("/base/g.csv"));
  EXPECT_FALSE(c.symmetrize);
  EXPECT_EQ(c.fed.split.train, 0.6);
  EXPECT_EQ(c.fed.split_convention, SplitConvention::WindowCount);
  EXPECT_EQ(c.fed.stride, 2u);
  EXPECT_EQ(c.fed.arch.hidden_dim, 16);
  EXPECT_EQ(c.fed.arch.output_len, 3);
  EXPECT_EQ(c.fed.mode, RunMode::LocalOnly);
  EXPECT_EQ(c.fed.rounds, 7);
  EXPECT_EQ(c.fed.adam.lr, 0.01);
  EXPECT_EQ(*c.fed.clip_norm, 5.0);
  EXPECT_EQ(c.fed.seed, 9u);
  EXPECT_EQ(c.fed.workers, 3);
  EXPECT_EQ(c.fed.aggregator.kind, AggregatorKind::MPFedAvg);
  EXPECT_EQ(c.fed.aggregator.hops, 2);
  EXPECT_EQ(c.fed.aggregator.alpha, 0.5);
  EXPECT_EQ(c.checkpoint_every, 2);
  EXPECT_TRUE(c.dump_params);
}

TEST(ParseConfig, ErrorsNameTheField) {
  auto message = [](const char* text) -> std::string {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message(R"({"schema_version": 1, "dataset": {"series": "s", "sereis": 1}})")
                .find("dataset.sereis: unknown key"),
            std::string::npos);
  EXPECT_NE(message(R"({"schema_version": 1, "dataset": {"series": "s"}, "extra": {}})")
                .find("unknown key"),
            std::string::npos);
  EXPECT_NE(message(R"({"dataset": {"series": "s"}})").find("schema_version"), std::string::npos);
  EXPECT_NE(message(R"({"schema_version": 2, "dataset": {"series": "s"}})").find("schema_version"),
            std::string::npos);
  EXPECT_NE(message(R"({"schema_version": 1, "dataset": {}})").find("dataset.series"),
            std::string::npos);
  EXPECT_NE(message(R"({"schema_version": 1, "dataset": {"series": "s"}, "training": {"rounds": "5"}})")
                .find("training.rounds"),
            std::string::npos);
  EXPECT_NE(message(R"({"schema_version": 1, "dataset": {"series": "s"}, "aggregator": {"kind": "avg"}})")
                .find("aggregator.kind"),
            std::string::npos);
  EXPECT_FALSE(message("{not json").empty());
}

TEST(ParseConfig, DumpThenParseRoundTrips) {
  const AppConfig a = parse_config(R"({"schema_version": 1, "dataset": {"series": "s.csv", "graph": "g.csv"},
    "training": {"seed": 4, "clip_norm": 1.5}, "aggregator": {"kind": "mpfedavg", "alpha": 0.3}})",
                                   "/x");
  const AppConfig b = parse_config(dump_config(a));
  EXPECT_EQ(dump_config(a), dump_config(b));
  EXPECT_EQ(describe(a.fed), describe(b.fed));
}

// ---- generate -----------------------------------------------------------------

TEST_F(Workspace, GenerateIsByteDeterministic) {
  const fs::path other = dir_ / "again";
  GenerateOptions g;
  g.nodes = 4;
  g.steps = 300;
  g.missing_rate = 0.05;
  g.out_dir = other;
  cmd_generate(g);
  EXPECT_EQ(slurp(dir_ / "series.csv"), slurp(other / "series.csv"));
  EXPECT_EQ(slurp(dir_ / "graph.csv"), slurp(other / "graph.csv"));
}

TEST_F(Workspace, GenerateMissingRate) {
  GenerateOptions g;
  g.nodes = 10;
  g.steps = 2000;
  g.missing_rate = 0.1;
  g.out_dir = dir_ / "missing";
  const GenerateSummary s = cmd_generate(g);
  EXPECT_NEAR(static_cast<double>(s.n_missing) / (10.0 * 2000.0), 0.1, 0.01);
  const TrafficDataset ds = load_dataset(s.series);
  EXPECT_EQ(ds.count_missing(), s.n_missing);
  EXPECT_EQ(load_graph(s.graph).n_nodes(), 10u);
}

// ---- train / evaluate / replay ---------------------------------------------------

TEST_F(Workspace, TrainWritesLayoutAndEvaluateReproducesFinal) {
  AppConfig c = config();
  c.checkpoint_every = 1;
  const TrainOutcome out = cmd_train(c);
  const fs::path run = dir_ / "run";
  EXPECT_TRUE(fs::exists(run / "manifest.json"));
  EXPECT_TRUE(fs::exists(run / "timing.jsonl"));
  EXPECT_TRUE(fs::exists(run / "checkpoints" / "round_0001" / "client_000.ckpt"));
  EXPECT_TRUE(fs::exists(run / "checkpoints" / "final" / "client_003.ckpt"));

  std::istringstream log(slurp(run / "results.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  EXPECT_EQ(lines, 3);  // two rounds and the final record

  const EvaluateResult ev = cmd_evaluate(c, run / "checkpoints" / "final");
  EXPECT_EQ(ev.n_models, 4u);
  const MetricReport& logged = out.result.final.last.test;
  EXPECT_NEAR(ev.overall.rmse, logged.rmse, 1e-9);
  EXPECT_NEAR(ev.overall.mae, logged.mae, 1e-9);
  EXPECT_NEAR(ev.overall.mape, logged.mape, 1e-9);
  EXPECT_EQ(ev.by_horizon.size(), 6u);
  const EvaluateResult val = cmd_evaluate(c, run / "checkpoints" / "final", EvalSplit::Val);
  EXPECT_NEAR(val.overall.rmse, out.result.final.last.val.rmse, 1e-9);
}

TEST_F(Workspace, IdenticalRunsGiveIdenticalLogs) {
  AppConfig a = config();
  AppConfig b = config();
  b.out_dir = dir_ / "run2";
  cmd_train(a);
  cmd_train(b);
  EXPECT_EQ(slurp(dir_ / "run" / "results.jsonl"), slurp(dir_ / "run2" / "results.jsonl"));
  EXPECT_EQ(slurp(dir_ / "run" / "checkpoints" / "final" / "client_002.ckpt"),
            slurp(dir_ / "run2" / "checkpoints" / "final" / "client_002.ckpt"));
}

TEST_F(Workspace, ReplayReproducesResults) {
  cmd_train(config());
  AppConfig replay = load_manifest(dir_ / "run" / "manifest.json");
  replay.out_dir = dir_ / "replay";
  cmd_train(replay);
  EXPECT_EQ(slurp(dir_ / "run" / "results.jsonl"), slurp(dir_ / "replay" / "results.jsonl"));
}

TEST_F(Workspace, ManifestDetectsChangedInputs) {
  cmd_train(config());
  std::string series = slurp(dir_ / "series.csv");
  series.back() = series.back() == '\n' ? ' ' : '\n';
  spit(dir_ / "series.csv", series);
  EXPECT_THROW(load_manifest(dir_ / "run" / "manifest.json"), IntegrityError);
}

TEST_F(Workspace, ConfigHashTracksResultsNotOutput) {
  AppConfig a = config();
  AppConfig b = config();
  b.out_dir = dir_ / "elsewhere";
  b.fed.workers = 4;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.fed.aggregator.hops = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST_F(Workspace, DumpParamsWritesAggregationMatrices) {
  AppConfig c = config();
  c.dump_params = true;
  cmd_train(c);
  const fs::path p = dir_ / "run" / "params";
  EXPECT_TRUE(fs::exists(p / "round_0001_collected.csv"));
  EXPECT_TRUE(fs::exists(p / "round_0002_aggregated.csv"));
  std::istringstream csv(slurp(p / "round_0001_aggregated.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "client_id,offset,value");
}

TEST_F(Workspace, ZeroHopsDiffersFromFedAvgOnlyWithSeveralClients) {
  spit(dir_ / "fed.json", small_config("fedavg"));
  AppConfig fed = load_config(dir_ / "fed.json");
  AppConfig zero = config();
  zero.fed.aggregator.hops = 0;
  fed.out_dir = dir_ / "fed";
  zero.out_dir = dir_ / "zero";
  const auto a = cmd_train(fed).result.final.last.test.rmse;
  const auto b = cmd_train(zero).result.final.last.test.rmse;
  EXPECT_NE(a, b);
}

TEST_F(Workspace, MissingInputsAreConfigErrors) {
  AppConfig c = config();
  c.graph.reset();
  EXPECT_THROW(cmd_train(c), ConfigError);
  c = config();
  c.series = dir_ / "nope.csv";
  EXPECT_THROW(cmd_train(c), ConfigError);
  c = config();
  c.fed.aggregator.kind = AggregatorKind::FedAvg;
  c.graph.reset();
  EXPECT_NO_THROW(cmd_train(c));
}

TEST_F(Workspace, EvaluateRejectsWrongModelCount) {
  cmd_train(config());
  const fs::path ck = dir_ / "run" / "checkpoints" / "final";
  fs::remove(ck / "client_003.ckpt");
  EXPECT_THROW(cmd_evaluate(config(), ck), LayoutError);
}

// ---- compare --------------------------------------------------------------------

TEST(CompareEntries, ParsesLabelsAndHops) {
  AggregatorConfig base;
  base.alpha = 0.7;
  const auto e = parse_compare_entries("local,centralized,fedavg,graphfedavg:2,mpfedavg", base);
  ASSERT_EQ(e.size(), 5u);
  EXPECT_EQ(e[0].mode, RunMode::LocalOnly);
  EXPECT_EQ(e[1].mode, RunMode::Centralized);
  EXPECT_EQ(e[2].aggregator.kind, AggregatorKind::FedAvg);
  EXPECT_EQ(e[3].aggregator.hops, 2);
  EXPECT_EQ(e[4].aggregator.alpha, 0.7);
  EXPECT_THROW(parse_compare_entries("fedprox", base), ConfigError);
}

TEST_F(Workspace, CompareAveragesOverSeeds) {
  const auto rows = cmd_compare(config(), parse_compare_entries("local,fedavg", {}), {0, 1});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.per_seed.size(), 2u);
    EXPECT_NEAR(r.rmse, 0.5 * (r.per_seed[0].rmse + r.per_seed[1].rmse), 1e-12);
    EXPECT_GE(r.rmse_std, 0.0);
  }
  std::ostringstream table;
  print_compare(table, rows);
  EXPECT_NE(table.str().find("fedavg"), std::string::npos);
}

// ---- the executable ---------------------------------------------------------------

int run_cli(const std::string& args) {
  const int status = std::system((std::string(FEDGRAPH_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(Workspace, ExecutableExitCodes) {
  const std::string cfg = (dir_ / "config.json").string();
  EXPECT_EQ(run_cli("train " + cfg + " --rounds 1"), 0);
  EXPECT_EQ(run_cli("evaluate " + cfg + " --checkpoints " + (dir_ / "run" / "checkpoints" / "final").string()), 0);
  EXPECT_EQ(run_cli("train --replay " + (dir_ / "run" / "manifest.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "replay" / "results.jsonl"));

  std::string text = slurp(dir_ / "config.json");
  text.replace(text.find("\"graph.csv\""), 11, "\"absent.csv\"");
  spit(dir_ / "broken.json", text);
  EXPECT_EQ(run_cli("train " + (dir_ / "broken.json").string()), 1);
  EXPECT_EQ(run_cli("train " + (dir_ / "missing.json").string()), 1);
}

}  // namespace
}  // namespace fedgraph::app
