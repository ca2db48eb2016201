// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "fedgraph/errors.hpp"
#include "fedgraph/rng.hpp"
#include "text_util.hpp"

namespace fedgraph {

TrafficDataset::TrafficDataset(std::size_t n_nodes, std::size_t n_steps,
                               std::vector<double> values, std::vector<std::uint8_t> observed,
                               double interval_min)
    : n_nodes_(n_nodes),
      n_steps_(n_steps),
      values_(std::move(values)),
      observed_(std::move(observed)),
      interval_min_(interval_min) {
  if (values_.size() != n_nodes_ * n_steps_ || observed_.size() != values_.size()) {
    throw ShapeError("dataset storage does not match n_nodes x n_steps");
  }
  if (!(interval_min_ > 0.0)) throw ValidationError("interval must be positive");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (observed_[k] && !std::isfinite(values_[k])) {
      throw ValidationError("observed value is not finite (node " +
                            std::to_string(k / std::max<std::size_t>(n_steps_, 1)) + ")");
    }
  }
}

std::size_t TrafficDataset::count_missing() const {
  return static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), 0));
}

namespace {

// Zero-mean, unit-variance node field smoothed by `hops` propagation steps.
std::vector<double> smooth_node_field(const PropagationMatrix& op, int hops, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(op.n_nodes());
  Eigen::VectorXd f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = rng.normal();
  for (int h = 0; h < hops; ++h) f = op.values * f;
  if (n > 1) {
    f.array() -= f.mean();
    const double sd = std::sqrt(f.squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) f /= sd;
  }
  return {f.data(), f.data() + n};
}

}  // namespace

TrafficDataset generate_synthetic(const SensorGraph& graph, const SyntheticConfig& config) {
  if (!(config.missing_rate >= 0.0 && config.missing_rate < 1.0)) {
    throw ConfigError("missing_rate must lie in [0,1)");
  }
  if (config.period < 1 || config.diffusion_hops < 0) {
    throw ConfigError("period must be >= 1 and diffusion_hops >= 0");
  }
  if (!(config.correlated_persistence >= 0.0 && config.correlated_persistence < 1.0)) {
    throw ConfigError("correlated_persistence must lie in [0,1)");
  }
  const std::size_t n = graph.n_nodes();
  const std::size_t steps = config.n_steps;
  const PropagationMatrix op = build_operator(graph, OperatorKind::RowNormalized);

  // Separate streams keep the signal independent of the missingness rate.
  Rng node_rng(derive_seed(config.seed, 0, 1));
  Rng signal_rng(derive_seed(config.seed, 0, 2));
  Rng mask_rng(derive_seed(config.seed, 0, 3));

  const auto level = smooth_node_field(op, config.diffusion_hops, node_rng);
  const auto amp = smooth_node_field(op, config.diffusion_hops, node_rng);
  const auto phase = smooth_node_field(op, config.diffusion_hops, node_rng);

  std::vector<double> values(n * steps);
  std::vector<std::uint8_t> observed(n * steps, 1);

  const double rho = config.correlated_persistence;
  const double innovation = std::sqrt(1.0 - rho * rho);
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(nn);
  Eigen::VectorXd shock(nn);
  const double omega = 2.0 * std::numbers::pi / static_cast<double>(config.period);

  for (std::size_t t = 0; t < steps; ++t) {
    for (Eigen::Index i = 0; i < nn; ++i) shock(i) = signal_rng.normal();
    for (int h = 0; h < config.diffusion_hops; ++h) shock = op.values * shock;
    state = t == 0 ? shock : (rho * state + innovation * shock).eval();
    for (std::size_t i = 0; i < n; ++i) {
      const double seasonal =
          (config.amplitude + config.amplitude_spread * amp[i]) *
          std::sin(omega * static_cast<double>(t) + config.phase_spread * phase[i]);
      values[i * steps + t] = config.base_level + config.level_spread * level[i] + seasonal +
                              config.correlated_scale * state(static_cast<Eigen::Index>(i)) +
                              config.noise_scale * signal_rng.normal();
    }
  }
  if (config.missing_rate > 0.0) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (mask_rng.uniform() < config.missing_rate) {
        observed[k] = 0;
        values[k] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return TrafficDataset(n, steps, std::move(values), std::move(observed), config.interval_min);
}

TrafficDataset parse_dataset(std::string_view text) {
  detail::LineReader lines(text);
  std::string_view line;
  if (!lines.next(line)) throw ParseError("empty series file", 1);
  const auto meta = detail::parse_metadata(line, lines.line_no());
  const auto nodes_it = meta.find("nodes");
  if (nodes_it == meta.end()) throw ParseError("metadata line lacks 'nodes='", 1);
  const std::size_t n = detail::parse_index(nodes_it->second, 1);
  double interval = 5.0;
  if (auto it = meta.find("interval_min"); it != meta.end()) {
    interval = detail::parse_real(it->second, 1);
  }

  if (!lines.next(line)) throw ParseError("missing header line", 2);
  const auto header = detail::split_csv(line);
  if (header.size() != n + 1 || detail::trim(header[0]) != "t") {
    throw ParseError("header must be 't' followed by " + std::to_string(n) + " node columns",
                     lines.line_no());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (detail::trim(header[i + 1]) != "node_" + std::to_string(i)) {
      throw ParseError("header column " + std::to_string(i + 2) + " should be 'node_" +
                           std::to_string(i) + "'",
                       lines.line_no());
    }
  }

  // Row-major while reading, transposed to node-major at the end.
  std::vector<double> rows;
  std::vector<std::uint8_t> rows_obs;
  std::size_t steps = 0;
  while (lines.next(line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != n + 1) {
      throw ParseError("ragged row: expected " + std::to_string(n + 1) + " fields, found " +
                           std::to_string(fields.size()),
                       lines.line_no());
    }
    const std::size_t t = detail::parse_index(fields[0], lines.line_no());
    if (t != steps) {
      throw ParseError("expected t=" + std::to_string(steps) + ", found " + std::to_string(t),
                       lines.line_no());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto field = detail::trim(fields[i + 1]);
      if (field.empty()) {
        rows.push_back(std::numeric_limits<double>::quiet_NaN());
        rows_obs.push_back(0);
      } else {
        const double v = detail::parse_real(field, lines.line_no());
        if (!std::isfinite(v)) {
          throw ParseError("non-finite value in column node_" + std::to_string(i),
                           lines.line_no());
        }
        rows.push_back(v);
        rows_obs.push_back(1);
      }
    }
    ++steps;
  }
  std::vector<double> values(n * steps);
  std::vector<std::uint8_t> observed(n * steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      values[i * steps + t] = rows[t * n + i];
      observed[i * steps + t] = rows_obs[t * n + i];
    }
  }
  return TrafficDataset(n, steps, std::move(values), std::move(observed), interval);
}

TrafficDataset load_dataset(const std::filesystem::path& path,
                            std::optional<double> expected_interval) {
  TrafficDataset ds = parse_dataset(detail::read_file(path));
  if (expected_interval && ds.interval_min() != *expected_interval) {
    throw ValidationError(path.string() + ": interval_min=" +
                          detail::format_real(ds.interval_min()) + ", expected " +
                          detail::format_real(*expected_interval));
  }
  return ds;
}

void write_dataset(const std::filesystem::path& path, const TrafficDataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# nodes=" << ds.n_nodes() << " interval_min=" << detail::format_real(ds.interval_min())
      << '\n';
  out << 't';
  for (std::size_t i = 0; i < ds.n_nodes(); ++i) out << ",node_" << i;
  out << '\n';
  std::string row;
  for (std::size_t t = 0; t < ds.n_steps(); ++t) {
    row = std::to_string(t);
    for (std::size_t i = 0; i < ds.n_nodes(); ++i) {
      row += ',';
      if (ds.observed(i, t)) row += detail::format_real(ds.value(i, t));
    }
    row += '\n';
    out << row;
  }
  if (!out) throw Error("failed writing " + path.string());
}

void SplitFractions::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
    throw ConfigError("split fractions must all be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

std::array<StepRange, 3> split_ranges(std::size_t n_steps, const SplitFractions& fracs) {
  fracs.validate();
  const double n = static_cast<double>(n_steps);
  const auto train_end = static_cast<std::size_t>(std::llround(n * fracs.train));
  const auto val_end = std::max(
      train_end, static_cast<std::size_t>(std::llround(n * (fracs.train + fracs.val))));
  return {StepRange{0, train_end}, StepRange{train_end, std::min(val_end, n_steps)},
          StepRange{std::min(val_end, n_steps), n_steps}};
}

NormStats compute_norm_stats(const TrafficDataset& ds, StepRange range) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ds.n_nodes(); ++i) {
    for (std::size_t t = range.begin; t < range.end; ++t) {
      if (ds.observed(i, t)) {
        sum += ds.value(i, t);
        ++count;
      }
    }
  }
  if (count == 0) throw ValidationError("no observed values in the training range");
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (std::size_t i = 0; i < ds.n_nodes(); ++i) {
    for (std::size_t t = range.begin; t < range.end; ++t) {
      if (ds.observed(i, t)) {
        const double d = ds.value(i, t) - mean;
        sq += d * d;
      }
    }
  }
  const double sd = std::sqrt(sq / static_cast<double>(count));
  if (!(sd > 0.0)) throw ValidationError("training data is constant (std = 0)");
  return {mean, sd};
}

std::size_t window_count(std::size_t len, std::size_t window, std::size_t stride) {
  if (stride == 0) throw ConfigError("window stride must be >= 1");
  if (window == 0 || len < window) return 0;
  return (len - window) / stride + 1;
}

SplitPlan chronological_split(const TrafficDataset& ds, const SplitFractions& fracs,
                              std::size_t window_len, SplitConvention convention) {
  SplitPlan plan;
  if (convention == SplitConvention::StepRanges) {
    const auto ranges = split_ranges(ds.n_steps(), fracs);
    plan.train = ranges[0];
    plan.val = ranges[1];
    plan.test = ranges[2];
  } else {
    fracs.validate();
    const std::size_t total = window_count(ds.n_steps(), window_len);
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(total) * fracs.test));
    const auto n_train =
        static_cast<std::size_t>(std::llround(static_cast<double>(total) * fracs.train));
    if (n_train + n_test > total) throw ConfigError("dataset too short for the requested split");
    const std::size_t n_val = total - n_train - n_test;
    // Windows [a, b) by start index cover steps [a, b - 1 + window_len).
    auto span_of = [&](std::size_t a, std::size_t b) {
      return b > a ? StepRange{a, b - 1 + window_len} : StepRange{a, a};
    };
    plan.train = span_of(0, n_train);
    plan.val = span_of(n_train, n_train + n_val);
    plan.test = span_of(n_train + n_val, total);
  }
  for (const auto& [name, r] : {std::pair{"train", plan.train}, std::pair{"val", plan.val},
                                std::pair{"test", plan.test}}) {
    if (r.size() < window_len) {
      throw ConfigError(std::string(name) + " split has " + std::to_string(r.size()) +
                        " steps, fewer than one window of " + std::to_string(window_len));
    }
  }
  plan.stats = compute_norm_stats(ds, plan.train);
  return plan;
}

std::shared_ptr<const NormalizedSeries> normalize(const TrafficDataset& ds,
                                                  const NormStats& stats) {
  auto out = std::make_shared<NormalizedSeries>();
  out->n_nodes = ds.n_nodes();
  out->n_steps = ds.n_steps();
  out->stats = stats;
  out->values.assign(ds.n_nodes() * ds.n_steps(), 0.0);
  out->observed.assign(ds.n_nodes() * ds.n_steps(), 0);
  for (std::size_t i = 0; i < ds.n_nodes(); ++i) {
    for (std::size_t t = 0; t < ds.n_steps(); ++t) {
      if (ds.observed(i, t)) {
        out->values[i * ds.n_steps() + t] = stats.normalize(ds.value(i, t));
        out->observed[i * ds.n_steps() + t] = 1;
      }
    }
  }
  return out;
}

WindowedSplit::WindowedSplit(std::string name, std::shared_ptr<const NormalizedSeries> series,
                             std::vector<WindowRef> windows, int input_len, int output_len)
    : name_(std::move(name)),
      series_(std::move(series)),
      windows_(std::move(windows)),
      input_len_(input_len),
      output_len_(output_len) {
  if (input_len_ < 1 || output_len_ < 1) throw ConfigError("window lengths must be >= 1");
  const auto span = static_cast<std::size_t>(input_len_ + output_len_);
  for (const auto& w : windows_) {
    if (w.node >= series_->n_nodes || w.start + span > series_->n_steps) {
      throw ShapeError("window outside the series");
    }
  }
}

WindowedSplit WindowedSplit::for_node(NodeId node) const {
  std::vector<WindowRef> mine;
  for (const auto& w : windows_)
    if (w.node == node) mine.push_back(w);
  return WindowedSplit(name_, series_, std::move(mine), input_len_, output_len_);
}

WindowedSplit WindowedSplit::concat(std::string name, std::span<const WindowedSplit> parts) {
  if (parts.empty()) throw ShapeError("concat of no splits");
  std::vector<WindowRef> all;
  for (const auto& p : parts) {
    if (p.series_ != parts.front().series_ || p.input_len_ != parts.front().input_len_ ||
        p.output_len_ != parts.front().output_len_) {
      throw ShapeError("concat requires splits over the same series and window shape");
    }
    all.insert(all.end(), p.windows_.begin(), p.windows_.end());
  }
  return WindowedSplit(std::move(name), parts.front().series_, std::move(all),
                       parts.front().input_len_, parts.front().output_len_);
}

void WindowedSplit::input(std::size_t k, std::span<double> out) const {
  const WindowRef& w = windows_.at(k);
  // Leading gaps get the train mean, which is 0 in normalized units.
  double last = 0.0;
  for (int s = 0; s < input_len_; ++s) {
    const std::size_t t = w.start + static_cast<std::size_t>(s);
    if (series_->is_observed(w.node, t)) last = series_->value(w.node, t);
    out[static_cast<std::size_t>(s)] = last;
  }
}

void WindowedSplit::target(std::size_t k, std::span<double> values,
                           std::span<double> mask) const {
  const WindowRef& w = windows_.at(k);
  for (int s = 0; s < output_len_; ++s) {
    const std::size_t t = w.start + static_cast<std::size_t>(input_len_ + s);
    const bool obs = series_->is_observed(w.node, t);
    values[static_cast<std::size_t>(s)] = obs ? series_->value(w.node, t) : 0.0;
    mask[static_cast<std::size_t>(s)] = obs ? 1.0 : 0.0;
  }
}

WindowedSplit make_windows(std::shared_ptr<const NormalizedSeries> series, StepRange range,
                           int input_len, int output_len, std::size_t stride,
                           std::string name) {
  if (input_len < 1 || output_len < 1) throw ConfigError("window lengths must be >= 1");
  if (range.end > series->n_steps || range.begin > range.end) {
    throw ShapeError("window range outside the series");
  }
  const auto span = static_cast<std::size_t>(input_len + output_len);
  if (range.size() < span) throw ConfigError("range shorter than one window");
  const std::size_t per_node = window_count(range.size(), span, stride);
  std::vector<WindowRef> windows;
  windows.reserve(per_node * series->n_nodes);
  for (std::size_t i = 0; i < series->n_nodes; ++i) {
    for (std::size_t k = 0; k < per_node; ++k) windows.push_back({i, range.begin + k * stride});
  }
  return WindowedSplit(std::move(name), std::move(series), std::move(windows), input_len,
                       output_len);
}

WindowedSplit make_windows(const TrafficDataset& ds, StepRange range, const NormStats& stats,
                           int input_len, int output_len, std::size_t stride,
                           std::string name) {
  return make_windows(normalize(ds, stats), range, input_len, output_len, stride,
                      std::move(name));
}

Batch make_batch(const WindowedSplit& split, std::span<const std::size_t> indices) {
  const auto b = static_cast<Eigen::Index>(indices.size());
  const auto m = static_cast<std::size_t>(split.input_len());
  const auto t_out = static_cast<std::size_t>(split.output_len());
  Batch batch;
  batch.inputs.assign(m, Eigen::MatrixXd(1, b));
  batch.targets.assign(t_out, Eigen::MatrixXd(1, b));
  batch.masks.assign(t_out, Eigen::MatrixXd(1, b));
  batch.refs.reserve(indices.size());
  std::vector<double> in(m), tv(t_out), tm(t_out);
  for (Eigen::Index c = 0; c < b; ++c) {
    const std::size_t k = indices[static_cast<std::size_t>(c)];
    split.input(k, in);
    split.target(k, tv, tm);
    for (std::size_t s = 0; s < m; ++s) batch.inputs[s](0, c) = in[s];
    for (std::size_t s = 0; s < t_out; ++s) {
      batch.targets[s](0, c) = tv[s];
      batch.masks[s](0, c) = tm[s];
    }
    batch.refs.push_back(split.windows()[k]);
  }
  return batch;
}

}  // namespace fedgraph
