// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/fedsim.hpp"
#include "fedgraph/graph.hpp"

namespace fedgraph::app {

// ---- generate ------------------------------------------------------------

struct GenerateOptions {
  std::size_t nodes = 20;
  std::size_t steps = 4000;
  std::string graph = "ring";  // ring | path | grid | complete | er
  std::uint64_t seed = 0;
  double missing_rate = 0.0;
  double edge_prob = 0.2;      // er only
  std::size_t grid_cols = 0;   // grid only; 0 picks the widest divisor <= sqrt(n)
  std::filesystem::path out_dir = ".";
};

struct GenerateSummary {
  std::filesystem::path series;
  std::filesystem::path graph;
  std::filesystem::path config;
  std::size_t n_nodes = 0;
  std::size_t n_steps = 0;
  std::size_t n_edges = 0;
  std::size_t n_missing = 0;
};

// Writes series.csv, graph.csv and a starter config.json into out_dir.
GenerateSummary cmd_generate(const GenerateOptions& options);

// ---- train ----------------------------------------------------------------

struct Inputs {
  TrafficDataset dataset;
  std::optional<SensorGraph> graph;
};

// Loads and cross-checks the files a config refers to.
Inputs load_inputs(const AppConfig& config);

struct TrainOutcome {
  std::filesystem::path out_dir;
  std::string config_hash;
  RunResult result;
};

// Output layout under config.out_dir:
//   manifest.json             written before training starts
//   results.jsonl             one record per round, then one final record
//   timing.jsonl              wall time per round (kept out of results.jsonl
//                             so identical runs give identical logs)
//   checkpoints/final/        client_NNN.ckpt per client
//   checkpoints/round_RRRR/   same, every checkpoint_every rounds
//   params/round_RRRR_{collected,aggregated}.csv   with dump_params
TrainOutcome cmd_train(const AppConfig& config);

// Reads a manifest written by cmd_train, verifies the input digests and
// returns the resolved config it recorded.
AppConfig load_manifest(const std::filesystem::path& path);

std::string round_record(const RoundReport& report);
std::string final_record(const FinalReport& report);

// ---- evaluate ---------------------------------------------------------------

enum class EvalSplit { Val, Test };
EvalSplit parse_eval_split(std::string_view name);

struct EvaluateResult {
  MetricReport overall;
  std::vector<MetricReport> by_horizon;
  std::size_t n_models = 0;
};

// Recomputes metrics from client_NNN.ckpt files in `checkpoint_dir`
// (one per node, or a single shared model).
EvaluateResult cmd_evaluate(const AppConfig& config, const std::filesystem::path& checkpoint_dir,
                            EvalSplit split = EvalSplit::Test);

// ---- compare ----------------------------------------------------------------

struct CompareEntry {
  std::string label;
  RunMode mode = RunMode::Federated;
  AggregatorConfig aggregator;
};

// Comma-separated list of local, centralized, fedavg, graphfedavg[:L],
// mpfedavg[:L]. Hops and alpha default to `base`.
std::vector<CompareEntry> parse_compare_entries(std::string_view list,
                                                const AggregatorConfig& base);

struct CompareRow {
  std::string label;
  std::vector<MetricReport> per_seed;  // last-round test metrics
  double mae = 0.0;
  double mape = 0.0;
  double rmse = 0.0;
  double rmse_std = 0.0;
};

std::vector<CompareRow> cmd_compare(const AppConfig& config,
                                    const std::vector<CompareEntry>& entries,
                                    const std::vector<std::uint64_t>& seeds);

void print_compare(std::ostream& out, const std::vector<CompareRow>& rows);
void write_compare_csv(const std::filesystem::path& path, const std::vector<CompareRow>& rows);

}  // namespace fedgraph::app
