// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "fedgraph/fedsim.hpp"

namespace fedgraph::app {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.3.0";

// Experiment configuration file (JSON). Every key is optional except
// schema_version and dataset.series; unknown keys are rejected.
//
//   {
//     "schema_version": 1,
//     "dataset":    {"series", "graph", "symmetrize", "binarize_threshold",
//                    "interval_min", "split", "split_convention", "stride"},
//     "model":      {"hidden_dim", "num_layers", "input_len", "output_len"},
//     "training":   {"mode", "rounds", "local_epochs", "batch_size", "lr",
//                    "clip_norm", "seed", "workers", "eval_batch_size"},
//     "aggregator": {"kind", "hops", "alpha"},
//     "output":     {"dir", "checkpoint_every", "dump_params"}
//   }
//
// Relative paths are resolved against the directory holding the file.
struct AppConfig {
  std::filesystem::path series;
  std::optional<std::filesystem::path> graph;
  bool symmetrize = true;
  std::optional<double> binarize_threshold;
  std::optional<double> interval_min;

  FedConfig fed;

  std::filesystem::path out_dir = "runs/latest";
  int checkpoint_every = 0;  // 0: final checkpoints only
  bool dump_params = false;
};

AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

// Fully materialized config as JSON text (stable key order, absolute paths).
std::string dump_config(const AppConfig& config);

// Hash of everything that determines results: the resolved config without
// the output section and worker count, plus the input file digests.
std::string config_hash(const AppConfig& config);

}  // namespace fedgraph::app
