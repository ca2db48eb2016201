// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedgraph/graph.hpp"
#include "fedgraph/model.hpp"

namespace fedgraph {

// z-score statistics, shared by all nodes.
struct NormStats {
  double mean = 0.0;
  double std = 1.0;

  double normalize(double v) const noexcept { return (v - mean) / std; }
  double denormalize(double v) const noexcept { return v * std + mean; }
};

// Per-node series in original units with an observation mask. Missing
// entries hold NaN and must never be read as values.
class TrafficDataset {
 public:
  TrafficDataset() = default;
  // values and observed are node-major: index = node * n_steps + t.
  TrafficDataset(std::size_t n_nodes, std::size_t n_steps, std::vector<double> values,
                 std::vector<std::uint8_t> observed, double interval_min = 5.0);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  double interval_min() const noexcept { return interval_min_; }

  double value(std::size_t node, std::size_t t) const { return values_[node * n_steps_ + t]; }
  bool observed(std::size_t node, std::size_t t) const {
    return observed_[node * n_steps_ + t] != 0;
  }
  std::span<const double> series(std::size_t node) const {
    return {values_.data() + node * n_steps_, n_steps_};
  }
  std::span<const std::uint8_t> mask(std::size_t node) const {
    return {observed_.data() + node * n_steps_, n_steps_};
  }
  std::size_t count_missing() const;

  // Mutable access for tests that poison unobserved entries.
  std::span<double> raw_values() noexcept { return values_; }

 private:
  std::size_t n_nodes_ = 0;
  std::size_t n_steps_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> observed_;
  double interval_min_ = 5.0;
};

// Synthetic spatio-temporal traffic-like signal:
//   x_i(t) = level_i + amp_i * sin(2 pi t / period + phase_i)
//            + correlated_i(t) + noise_i(t)
// level/amp/phase are smooth over the graph (diffused node noise),
// correlated(t) is temporally persistent noise diffused `diffusion_hops`
// times through the row-normalized operator, so neighbours co-vary.
struct SyntheticConfig {
  std::size_t n_steps = 4000;
  std::uint64_t seed = 0;
  double missing_rate = 0.0;
  double interval_min = 5.0;
  int period = 288;
  int diffusion_hops = 3;
  double base_level = 60.0;
  double level_spread = 6.0;
  double amplitude = 10.0;
  double amplitude_spread = 4.0;
  double phase_spread = 1.0;
  double correlated_scale = 4.0;
  double correlated_persistence = 0.95;
  double noise_scale = 1.0;
};

TrafficDataset generate_synthetic(const SensorGraph& graph, const SyntheticConfig& config);

// Series CSV:
//   # nodes=N interval_min=5
//   t,node_0,...,node_{N-1}
//   0,61.2,,58.9          (empty field = missing)
TrafficDataset load_dataset(const std::filesystem::path& path,
                            std::optional<double> expected_interval = std::nullopt);
TrafficDataset parse_dataset(std::string_view text);
void write_dataset(const std::filesystem::path& path, const TrafficDataset& ds);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  void validate() const;
};

// Half-open step range [begin, end).
struct StepRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const StepRange&) const = default;
};

enum class SplitConvention {
  // Disjoint step ranges; boundaries round(n * cumulative fraction).
  StepRanges,
  // Split the sequence of all windows by count (train/test rounded, val the
  // remainder) and report the step span each group covers. Consecutive
  // ranges overlap by window_len - 1 steps. Reproduces the published
  // METR-LA / PEMS-BAY sequence counts.
  WindowCount,
};

struct SplitPlan {
  StepRange train;
  StepRange val;
  StepRange test;
  NormStats stats;  // from observed entries in the train range only
};

std::array<StepRange, 3> split_ranges(std::size_t n_steps, const SplitFractions& fracs);

// Throws ConfigError if any range is shorter than window_len.
SplitPlan chronological_split(const TrafficDataset& ds, const SplitFractions& fracs,
                              std::size_t window_len = 24,
                              SplitConvention convention = SplitConvention::StepRanges);

// Mean and population std over observed entries of all nodes in `range`.
// Throws ValidationError when nothing is observed or std is zero.
NormStats compute_norm_stats(const TrafficDataset& ds, StepRange range);

// Number of windows of length `window` with the given stride in `len` steps.
std::size_t window_count(std::size_t len, std::size_t window, std::size_t stride = 1);

// Dataset in normalized units. Unobserved entries are stored as 0.
struct NormalizedSeries {
  std::size_t n_nodes = 0;
  std::size_t n_steps = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> observed;
  NormStats stats;

  double value(std::size_t node, std::size_t t) const { return values[node * n_steps + t]; }
  bool is_observed(std::size_t node, std::size_t t) const {
    return observed[node * n_steps + t] != 0;
  }
};

std::shared_ptr<const NormalizedSeries> normalize(const TrafficDataset& ds,
                                                  const NormStats& stats);

struct WindowRef {
  NodeId node = 0;
  std::size_t start = 0;  // first input step

  bool operator==(const WindowRef&) const = default;
};

// Sliding windows over one split. Windows are materialized on demand:
// inputs are imputed (last observed value in the window, leading gaps get
// the train mean), targets keep their missingness as a mask.
class WindowedSplit {
 public:
  WindowedSplit() = default;
  WindowedSplit(std::string name, std::shared_ptr<const NormalizedSeries> series,
                std::vector<WindowRef> windows, int input_len, int output_len);

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return windows_.size(); }
  bool empty() const noexcept { return windows_.empty(); }
  int input_len() const noexcept { return input_len_; }
  int output_len() const noexcept { return output_len_; }
  const std::vector<WindowRef>& windows() const noexcept { return windows_; }
  const NormalizedSeries& series() const { return *series_; }
  const NormStats& stats() const { return series_->stats; }

  WindowedSplit for_node(NodeId node) const;
  // Concatenation of splits that share one normalized series.
  static WindowedSplit concat(std::string name, std::span<const WindowedSplit> parts);

  // Normalized, imputed input of window k (input_len values).
  void input(std::size_t k, std::span<double> out) const;
  // Normalized targets (0 where missing) and observation mask.
  void target(std::size_t k, std::span<double> values, std::span<double> mask) const;

 private:
  std::string name_;
  std::shared_ptr<const NormalizedSeries> series_;
  std::vector<WindowRef> windows_;
  int input_len_ = 12;
  int output_len_ = 12;
};

// Windows of input_len + output_len steps fully inside `range`, per node.
WindowedSplit make_windows(std::shared_ptr<const NormalizedSeries> series, StepRange range,
                           int input_len = 12, int output_len = 12, std::size_t stride = 1,
                           std::string name = "split");
WindowedSplit make_windows(const TrafficDataset& ds, StepRange range, const NormStats& stats,
                           int input_len = 12, int output_len = 12, std::size_t stride = 1,
                           std::string name = "split");

// Model-ready batch (D = 1): one 1 x B matrix per step.
struct Batch {
  Sequence inputs;
  Sequence targets;
  Sequence masks;
  std::vector<WindowRef> refs;

  std::size_t size() const noexcept { return refs.size(); }
};

Batch make_batch(const WindowedSplit& split, std::span<const std::size_t> indices);

}  // namespace fedgraph
