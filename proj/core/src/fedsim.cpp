// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/fedsim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <sstream>
#include <thread>

#include "fedgraph/digest.hpp"
#include "fedgraph/errors.hpp"
#include "fedgraph/rng.hpp"
#include "fedgraph/training.hpp"
#include "text_util.hpp"

namespace fedgraph {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;  // "init"
constexpr std::uint64_t kShufflePurpose = 7;

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
// collected per index; the one with the lowest index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const DivergedError& e) {
      throw DivergedError("client " + std::to_string(i) + ": " + e.what());
    }
  }
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string hash_of(const FedConfig& config) {
  return config.config_hash.empty() ? hex64(fnv1a64(describe(config))) : config.config_hash;
}

void finalize(RunResult& result) {
  if (result.rounds.empty()) return;
  result.final.last = result.rounds.back();
  const RoundReport* best = &result.rounds.front();
  for (const auto& r : result.rounds) {
    if (r.val.defined() && (!best->val.defined() || r.val.rmse < best->val.rmse)) best = &r;
  }
  result.final.best_val_round = best->round;
  result.final.best_val_test = best->test;
}

std::vector<WindowedSplit> per_client(const WindowedSplit& split, std::size_t n) {
  std::vector<WindowedSplit> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(split.for_node(i));
  return out;
}

RoundReport make_report(const FedConfig& config, int round, const std::string& hash,
                        std::span<const GruSeq2Seq> models,
                        const std::vector<WindowedSplit>& val,
                        const std::vector<WindowedSplit>& test, double train_loss) {
  RoundReport r;
  r.round = round;
  r.mode = config.mode;
  r.aggregator = config.aggregator;
  r.config_hash = hash;
  r.train_loss = train_loss;
  const auto pooled = [&](const std::vector<WindowedSplit>& parts,
                          std::vector<MetricReport>* per_step) {
    const std::size_t n = parts.size();
    std::vector<MetricAccumulator> totals(n);
    std::vector<std::vector<MetricAccumulator>> steps(n);
    parallel_for(n, config.workers, [&](std::size_t i) {
      const GruSeq2Seq& m = models.size() == 1 ? models[0] : models[i];
      accumulate_metrics(m, parts[i], totals[i], per_step ? &steps[i] : nullptr,
                         config.eval_batch_size);
    });
    MetricAccumulator all;
    std::vector<MetricAccumulator> by_step(static_cast<std::size_t>(config.arch.output_len));
    for (std::size_t i = 0; i < n; ++i) {
      all.merge(totals[i]);
      for (std::size_t s = 0; s < steps[i].size(); ++s) by_step[s].merge(steps[i][s]);
    }
    if (per_step) {
      per_step->clear();
      for (const auto& acc : by_step) per_step->push_back(acc.report());
    }
    return all.report();
  };
  r.val = pooled(val, nullptr);
  r.test = pooled(test, &r.test_by_horizon);
  return r;
}

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Federated: return "federated";
    case RunMode::Centralized: return "centralized";
    case RunMode::LocalOnly: return "local";
  }
  return "unknown";
}

RunMode parse_run_mode(std::string_view name) {
  if (name == "federated") return RunMode::Federated;
  if (name == "centralized" || name == "central") return RunMode::Centralized;
  if (name == "local" || name == "localonly") return RunMode::LocalOnly;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected federated, centralized or local)");
}

void FedConfig::validate() const {
  arch.validate();
  if (arch.input_dim != 1) throw ConfigError("only input_dim = 1 (speed) series are supported");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (local_epochs < 0) throw ConfigError("local_epochs must be >= 0");
  if (batch_size < 1 || eval_batch_size < 1) throw ConfigError("batch sizes must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  aggregator.validate();
  split.validate();
}

std::string describe(const FedConfig& c) {
  using detail::format_real;
  std::ostringstream out;
  out << "arch=" << c.arch.input_dim << ',' << c.arch.hidden_dim << ',' << c.arch.num_layers
      << ',' << c.arch.input_len << ',' << c.arch.output_len << ";rounds=" << c.rounds
      << ";epochs=" << c.local_epochs << ";batch=" << c.batch_size
      << ";adam=" << format_real(c.adam.lr) << ',' << format_real(c.adam.beta1) << ','
      << format_real(c.adam.beta2) << ',' << format_real(c.adam.eps)
      << ";clip=" << (c.clip_norm ? format_real(*c.clip_norm) : "none")
      << ";mode=" << to_string(c.mode);
  if (c.mode == RunMode::Federated) {
    out << ";agg=" << to_string(c.aggregator.kind) << ',' << c.aggregator.hops << ','
        << format_real(c.aggregator.alpha);
  }
  out << ";seed=" << c.seed << ";split=" << format_real(c.split.train) << ','
      << format_real(c.split.val) << ',' << format_real(c.split.test) << ','
      << (c.split_convention == SplitConvention::StepRanges ? "steps" : "windows")
      << ";stride=" << c.stride << ";eval_batch=" << c.eval_batch_size;
  return out.str();
}

PreparedData prepare_data(const TrafficDataset& ds, const FedConfig& config) {
  const auto window = static_cast<std::size_t>(config.arch.input_len + config.arch.output_len);
  PreparedData d;
  d.plan = chronological_split(ds, config.split, window, config.split_convention);
  const auto series = normalize(ds, d.plan.stats);
  const int m = config.arch.input_len;
  const int t = config.arch.output_len;
  d.train = make_windows(series, d.plan.train, m, t, config.stride, "train");
  d.val = make_windows(series, d.plan.val, m, t, config.stride, "val");
  d.test = make_windows(series, d.plan.test, m, t, config.stride, "test");
  return d;
}

GruSeq2Seq initial_model(const FedConfig& config) {
  return init_params(config.arch, derive_seed(config.seed, kInitStream));
}

std::uint64_t client_seed(const FedConfig& config, NodeId node) {
  return derive_seed(config.seed, node, kShufflePurpose);
}

MetricReport evaluate_clients(std::span<const GruSeq2Seq> models, const WindowedSplit& split,
                              int workers, std::size_t batch_size,
                              std::vector<MetricReport>* per_step) {
  const std::size_t n = split.series().n_nodes;
  if (models.size() != 1 && models.size() != n) {
    throw ShapeError("evaluate_clients: need one model or one per node");
  }
  FedConfig cfg;
  cfg.workers = workers;
  cfg.eval_batch_size = batch_size;
  cfg.arch = models[0].arch;
  const auto parts = per_client(split, n);
  RoundReport r = make_report(cfg, 0, "", models, parts, parts, 0.0);
  if (per_step) *per_step = r.test_by_horizon;
  return r.test;
}

RunResult run(const FedConfig& config, const SensorGraph* graph, const TrafficDataset& ds,
              const RunHooks& hooks) {
  config.validate();
  if (config.mode == RunMode::Centralized) return run_centralized(config, ds, hooks);

  const std::size_t n = ds.n_nodes();
  const bool aggregate_round = config.mode == RunMode::Federated;
  std::optional<GraphOperators> ops;
  if (aggregate_round && config.aggregator.kind != AggregatorKind::FedAvg) {
    if (graph == nullptr) throw ConfigError("graph-aware aggregation requires a graph");
    if (graph->n_nodes() != n) {
      throw ConfigError("graph has " + std::to_string(graph->n_nodes()) +
                        " nodes but the dataset has " + std::to_string(n));
    }
    ops = GraphOperators::from_graph(*graph);
  }

  const PreparedData data = prepare_data(ds, config);
  const auto train = per_client(data.train, n);
  const auto val = per_client(data.val, n);
  const auto test = per_client(data.test, n);
  const std::string hash = hash_of(config);
  const ParamLayout layout = ParamLayout::for_arch(config.arch);

  RunResult result;
  const GruSeq2Seq init = initial_model(config);
  result.models.assign(n, init);
  result.optimizers.assign(n, AdamState::for_model(init, config.adam));
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rngs.emplace_back(client_seed(config, i));

  TrainOptions opts;
  opts.epochs = config.local_epochs;
  opts.batch_size = config.batch_size;
  opts.clip_norm = config.clip_norm;

  for (int round = 1; round <= config.rounds; ++round) {
    Stopwatch clock;
    std::vector<double> last_loss(n, 0.0);
    parallel_for(n, config.workers, [&](std::size_t i) {
      const auto losses = train_epochs(result.models[i], result.optimizers[i], train[i], opts, rngs[i]);
      if (!losses.empty()) last_loss[i] = losses.back();
    });

    if (aggregate_round) {
      const ParamMatrix collected = collect(result.models, layout);
      const ParamMatrix aggregated = aggregate(collected, config.aggregator, ops ? &*ops : nullptr);
      if (hooks.on_aggregate) hooks.on_aggregate(round, collected, aggregated);
      for (std::size_t i = 0; i < n; ++i) result.models[i] = unflatten(aggregated.row(i), layout);
    }
    if (hooks.on_models) hooks.on_models(round, result.models, result.optimizers);

    double mean_loss = 0.0;
    for (double l : last_loss) mean_loss += l;
    mean_loss /= static_cast<double>(std::max<std::size_t>(n, 1));
    RoundReport report = make_report(config, round, hash, result.models, val, test, mean_loss);
    report.wall_seconds = clock.seconds();
    if (hooks.on_round) hooks.on_round(report);
    result.rounds.push_back(std::move(report));
  }
  finalize(result);
  return result;
}

RunResult run_centralized(const FedConfig& config, const TrafficDataset& ds,
                          const RunHooks& hooks) {
  config.validate();
  const std::size_t n = ds.n_nodes();
  const PreparedData data = prepare_data(ds, config);
  const auto val = per_client(data.val, n);
  const auto test = per_client(data.test, n);
  const std::string hash = hash_of(config);

  RunResult result;
  result.models.push_back(initial_model(config));
  result.optimizers.push_back(AdamState::for_model(result.models[0], config.adam));
  // Same stream as client 0, so a single-node dataset reproduces LocalOnly.
  Rng rng(client_seed(config, 0));

  TrainOptions opts;
  opts.epochs = config.local_epochs;
  opts.batch_size = config.batch_size;
  opts.clip_norm = config.clip_norm;

  for (int round = 1; round <= config.rounds; ++round) {
    Stopwatch clock;
    double loss = 0.0;
    try {
      const auto losses = train_epochs(result.models[0], result.optimizers[0], data.train, opts, rng);
      if (!losses.empty()) loss = losses.back();
    } catch (const DivergedError& e) {
      throw DivergedError(std::string("centralized model: ") + e.what());
    }
    if (hooks.on_models) hooks.on_models(round, result.models, result.optimizers);
    RoundReport report = make_report(config, round, hash, result.models, val, test, loss);
    report.wall_seconds = clock.seconds();
    if (hooks.on_round) hooks.on_round(report);
    result.rounds.push_back(std::move(report));
  }
  finalize(result);
  return result;
}

}  // namespace fedgraph
