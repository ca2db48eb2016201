// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedgraph/aggregation.hpp"
#include "fedgraph/data.hpp"
#include "fedgraph/graph.hpp"
#include "fedgraph/metrics.hpp"
#include "fedgraph/model.hpp"

namespace fedgraph {

enum class RunMode { Federated, Centralized, LocalOnly };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view name);

struct FedConfig {
  GruArch arch;
  int rounds = 5;
  int local_epochs = 3;
  std::size_t batch_size = 128;
  AdamConfig adam;
  std::optional<double> clip_norm;
  AggregatorConfig aggregator;
  RunMode mode = RunMode::Federated;
  std::uint64_t seed = 0;
  int workers = 1;

  SplitFractions split;
  SplitConvention split_convention = SplitConvention::StepRanges;
  std::size_t stride = 1;
  std::size_t eval_batch_size = 512;

  // Identifies the experiment in reports. When empty, run() derives one
  // from the semantic fields above (workers excluded).
  std::string config_hash;

  void validate() const;
};

// Canonical text of every field that affects results (not `workers`).
std::string describe(const FedConfig& config);

struct RoundReport {
  int round = 0;  // 1-based
  RunMode mode = RunMode::Federated;
  AggregatorConfig aggregator;
  std::string config_hash;
  double train_loss = 0.0;  // mean over clients of the last local epoch's MSE
  MetricReport val;
  MetricReport test;
  std::vector<MetricReport> test_by_horizon;
  double wall_seconds = 0.0;
};

struct FinalReport {
  RoundReport last;         // headline: last round's test metrics
  int best_val_round = 0;   // round with the lowest val RMSE
  MetricReport best_val_test;
};

struct RunResult {
  std::vector<RoundReport> rounds;
  FinalReport final;
  // Per-client models and optimizer state after the last round. Centralized
  // runs hold a single entry.
  std::vector<GruSeq2Seq> models;
  std::vector<AdamState> optimizers;
};

struct RunHooks {
  std::function<void(const RoundReport&)> on_round;
  // Server view of one aggregation: X as collected and as returned.
  std::function<void(int round, const ParamMatrix& collected, const ParamMatrix& aggregated)>
      on_aggregate;
  // Models after each round (after aggregation, before evaluation).
  std::function<void(int round, std::span<const GruSeq2Seq>, std::span<const AdamState>)>
      on_models;
};

// Splits, normalization and windows for one dataset under one config.
struct PreparedData {
  SplitPlan plan;
  WindowedSplit train;
  WindowedSplit val;
  WindowedSplit test;
};

PreparedData prepare_data(const TrafficDataset& ds, const FedConfig& config);

// Initial parameters broadcast to every client (and the centralized model).
GruSeq2Seq initial_model(const FedConfig& config);
// Shuffle stream of one client.
std::uint64_t client_seed(const FedConfig& config, NodeId node);

// Federated or LocalOnly rounds; Centralized is forwarded to
// run_centralized. `graph` is required for graph-aware aggregators.
RunResult run(const FedConfig& config, const SensorGraph* graph, const TrafficDataset& ds,
              const RunHooks& hooks = {});

// One model trained on the union of all clients' windows for
// rounds x local_epochs epochs, evaluated through the same path.
RunResult run_centralized(const FedConfig& config, const TrafficDataset& ds,
                          const RunHooks& hooks = {});

// Evaluates one model per client (or a single shared model when
// models.size() == 1) on `split`, pooling clients in node order.
MetricReport evaluate_clients(std::span<const GruSeq2Seq> models, const WindowedSplit& split,
                              int workers = 1, std::size_t batch_size = 512,
                              std::vector<MetricReport>* per_step = nullptr);

}  // namespace fedgraph
