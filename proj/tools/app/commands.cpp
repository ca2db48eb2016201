// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fedgraph/checkpoint.hpp"
#include "fedgraph/digest.hpp"
#include "fedgraph/errors.hpp"
#include "fedgraph/rng.hpp"
#include "json.hpp"

namespace fedgraph::app {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string numbered(std::string_view prefix, std::size_t k, int width) {
  std::ostringstream s;
  s << prefix << std::setw(width) << std::setfill('0') << k;
  return s.str();
}

fs::path client_file(const fs::path& dir, std::size_t client) {
  return dir / (numbered("client_", client, 3) + ".ckpt");
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

Json metrics_json(const MetricReport& m) {
  if (!m.defined()) {
    return {{"mae", nullptr}, {"mape", nullptr}, {"rmse", nullptr}, {"n", 0}};
  }
  return {{"mae", m.mae}, {"mape", m.mape}, {"rmse", m.rmse}, {"n", m.n_evaluated}};
}

Json aggregator_json(RunMode mode, const AggregatorConfig& a) {
  if (mode != RunMode::Federated) return nullptr;
  return {{"kind", to_string(a.kind)}, {"hops", a.hops}, {"alpha", a.alpha}};
}

void save_models(const fs::path& dir, std::span<const GruSeq2Seq> models,
                 std::span<const AdamState> optimizers) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < models.size(); ++i) {
    save_checkpoint(client_file(dir, i), models[i], &optimizers[i]);
  }
}

fs::path require_file(const fs::path& p, const char* field) {
  if (!fs::is_regular_file(p)) {
    throw ConfigError(std::string(field) + ": file not found: " + p.string());
  }
  return p;
}

SensorGraph generated_graph(const GenerateOptions& o, Rng& rng) {
  if (o.graph == "ring") return make_ring(o.nodes);
  if (o.graph == "path") return make_path(o.nodes);
  if (o.graph == "complete") return make_complete(o.nodes);
  if (o.graph == "er") return make_erdos_renyi(o.nodes, o.edge_prob, rng);
  if (o.graph == "grid") {
    std::size_t cols = o.grid_cols;
    if (cols == 0) {
      cols = 1;
      for (std::size_t c = 1; c * c <= o.nodes; ++c) {
        if (o.nodes % c == 0) cols = c;
      }
    }
    if (o.nodes % cols != 0) {
      throw ConfigError("--grid-cols must divide --nodes");
    }
    return make_grid(o.nodes / cols, cols);
  }
  throw ConfigError("--graph: expected ring, path, grid, complete or er");
}

double mean_of(const std::vector<MetricReport>& v, double MetricReport::*field) {
  double s = 0.0;
  for (const auto& m : v) s += m.*field;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

// ---- generate ------------------------------------------------------------

GenerateSummary cmd_generate(const GenerateOptions& o) {
  if (o.nodes < 1) throw ConfigError("--nodes must be >= 1");
  if (o.steps < 1) throw ConfigError("--steps must be >= 1");
  if (!(o.missing_rate >= 0.0 && o.missing_rate < 1.0)) {
    throw ConfigError("--missing-rate must lie in [0, 1)");
  }
  Rng graph_rng(derive_seed(o.seed, 0, 1));
  const SensorGraph graph = generated_graph(o, graph_rng);

  SyntheticConfig sc;
  sc.n_steps = o.steps;
  sc.seed = o.seed;
  sc.missing_rate = o.missing_rate;
  const TrafficDataset ds = generate_synthetic(graph, sc);

  fs::create_directories(o.out_dir);
  GenerateSummary s;
  s.series = o.out_dir / "series.csv";
  s.graph = o.out_dir / "graph.csv";
  s.config = o.out_dir / "config.json";
  write_dataset(s.series, ds);
  write_graph(s.graph, graph);

  Json cfg;
  cfg["schema_version"] = kSchemaVersion;
  cfg["dataset"] = {{"series", "series.csv"}, {"graph", "graph.csv"}};
  cfg["training"] = {{"seed", o.seed}};
  cfg["aggregator"] = {{"kind", "graphfedavg"}, {"hops", 1}};
  cfg["output"] = {{"dir", "run"}};
  write_text(s.config, cfg.dump(2) + "\n");

  s.n_nodes = ds.n_nodes();
  s.n_steps = ds.n_steps();
  s.n_edges = graph.edges().size();
  s.n_missing = ds.count_missing();
  return s;
}

// ---- train ----------------------------------------------------------------

Inputs load_inputs(const AppConfig& c) {
  Inputs in;
  in.dataset = load_dataset(require_file(c.series, "dataset.series"), c.interval_min);
  const bool needs_graph = c.fed.mode == RunMode::Federated &&
                           c.fed.aggregator.kind != AggregatorKind::FedAvg;
  if (c.graph) {
    in.graph = load_graph(require_file(*c.graph, "dataset.graph"), c.symmetrize,
                          c.binarize_threshold);
    if (in.graph->n_nodes() != in.dataset.n_nodes()) {
      throw ConfigError("dataset.graph: graph has " + std::to_string(in.graph->n_nodes()) +
                        " nodes but the series has " + std::to_string(in.dataset.n_nodes()));
    }
  } else if (needs_graph) {
    throw ConfigError(std::string("dataset.graph: required by aggregator ") +
                      std::string(to_string(c.fed.aggregator.kind)));
  }
  return in;
}

std::string round_record(const RoundReport& r) {
  Json j;
  j["type"] = "round";
  j["round"] = r.round;
  j["mode"] = to_string(r.mode);
  j["aggregator"] = aggregator_json(r.mode, r.aggregator);
  j["config_hash"] = r.config_hash;
  j["train_loss"] = r.train_loss;
  j["val"] = metrics_json(r.val);
  j["test"] = metrics_json(r.test);
  Json horizon = Json::array();
  for (const auto& m : r.test_by_horizon) horizon.push_back(metrics_json(m));
  j["test_by_horizon"] = std::move(horizon);
  return j.dump();
}

std::string final_record(const FinalReport& f) {
  Json j;
  j["type"] = "final";
  j["round"] = f.last.round;
  j["mode"] = to_string(f.last.mode);
  j["aggregator"] = aggregator_json(f.last.mode, f.last.aggregator);
  j["config_hash"] = f.last.config_hash;
  j["val"] = metrics_json(f.last.val);
  j["test"] = metrics_json(f.last.test);
  j["best_val_round"] = f.best_val_round;
  j["best_val_test"] = metrics_json(f.best_val_test);
  return j.dump();
}

TrainOutcome cmd_train(const AppConfig& config) {
  const Inputs in = load_inputs(config);
  AppConfig c = config;
  c.fed.config_hash = config_hash(c);

  TrainOutcome outcome;
  outcome.out_dir = c.out_dir;
  outcome.config_hash = c.fed.config_hash;
  fs::create_directories(c.out_dir);

  Json manifest;
  manifest["tool"] = "fedgraph";
  manifest["version"] = kToolVersion;
  manifest["config"] = Json::parse(dump_config(c));
  manifest["config_hash"] = c.fed.config_hash;
  manifest["seed"] = c.fed.seed;
  manifest["inputs"]["series"] = {{"path", c.series.string()},
                                  {"fnv1a64", file_digest(c.series)}};
  if (c.graph) {
    manifest["inputs"]["graph"] = {{"path", c.graph->string()},
                                   {"fnv1a64", file_digest(*c.graph)}};
  }
  write_text(c.out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::ofstream results(c.out_dir / "results.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream timing(c.out_dir / "timing.jsonl", std::ios::binary | std::ios::trunc);
  if (!results || !timing) throw Error("cannot write logs in " + c.out_dir.string());

  RunHooks hooks;
  hooks.on_round = [&](const RoundReport& r) {
    results << round_record(r) << '\n' << std::flush;
    timing << Json{{"round", r.round}, {"wall_seconds", r.wall_seconds}}.dump() << '\n'
           << std::flush;
  };
  if (c.checkpoint_every > 0) {
    hooks.on_models = [&](int round, std::span<const GruSeq2Seq> models,
                          std::span<const AdamState> opts) {
      if (round % c.checkpoint_every == 0 && round != c.fed.rounds) {
        save_models(c.out_dir / "checkpoints" / numbered("round_", round, 4), models, opts);
      }
    };
  }
  if (c.dump_params) {
    fs::create_directories(c.out_dir / "params");
    hooks.on_aggregate = [&](int round, const ParamMatrix& before, const ParamMatrix& after) {
      const std::string stem = numbered("round_", round, 4);
      write_param_csv(c.out_dir / "params" / (stem + "_collected.csv"), before);
      write_param_csv(c.out_dir / "params" / (stem + "_aggregated.csv"), after);
    };
  }

  outcome.result = run(c.fed, in.graph ? &*in.graph : nullptr, in.dataset, hooks);
  results << final_record(outcome.result.final) << '\n';
  if (!results) throw Error("failed writing results log");

  save_models(c.out_dir / "checkpoints" / "final", outcome.result.models,
              outcome.result.optimizers);
  return outcome;
}

AppConfig load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  Json m;
  try {
    m = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!m.contains("config") || !m.contains("inputs")) {
    throw ConfigError("manifest " + path.string() + " lacks config or inputs");
  }
  AppConfig c = parse_config(m["config"].dump(), path.parent_path());
  for (const auto& item : m["inputs"].items()) {
    const fs::path file = item.value().at("path").get<std::string>();
    const std::string expected = item.value().at("fnv1a64").get<std::string>();
    if (!fs::is_regular_file(file)) {
      throw ConfigError("manifest input " + item.key() + " missing: " + file.string());
    }
    if (file_digest(file) != expected) {
      throw IntegrityError("manifest input " + item.key() + " changed since the run: " +
                           file.string());
    }
  }
  return c;
}

// ---- evaluate ---------------------------------------------------------------

EvalSplit parse_eval_split(std::string_view name) {
  if (name == "test") return EvalSplit::Test;
  if (name == "val") return EvalSplit::Val;
  throw ConfigError("--split: expected val or test");
}

EvaluateResult cmd_evaluate(const AppConfig& config, const fs::path& checkpoint_dir,
                            EvalSplit split) {
  const TrafficDataset ds = load_dataset(require_file(config.series, "dataset.series"),
                                         config.interval_min);
  if (!fs::is_directory(checkpoint_dir)) {
    throw ConfigError("checkpoint directory not found: " + checkpoint_dir.string());
  }
  std::vector<GruSeq2Seq> models;
  for (std::size_t i = 0;; ++i) {
    const fs::path file = client_file(checkpoint_dir, i);
    if (!fs::exists(file)) break;
    models.push_back(load_checkpoint(file, &config.fed.arch).model);
  }
  if (models.empty()) {
    throw ConfigError("no client_NNN.ckpt files in " + checkpoint_dir.string());
  }
  if (models.size() != 1 && models.size() != ds.n_nodes()) {
    throw LayoutError("found " + std::to_string(models.size()) + " checkpoints for " +
                      std::to_string(ds.n_nodes()) + " nodes");
  }
  const PreparedData data = prepare_data(ds, config.fed);
  EvaluateResult r;
  r.n_models = models.size();
  r.overall = evaluate_clients(models, split == EvalSplit::Test ? data.test : data.val,
                               config.fed.workers, config.fed.eval_batch_size, &r.by_horizon);
  return r;
}

// ---- compare ----------------------------------------------------------------

std::vector<CompareEntry> parse_compare_entries(std::string_view list,
                                                const AggregatorConfig& base) {
  std::vector<CompareEntry> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string item(list.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) continue;
    CompareEntry e;
    e.label = item;
    e.aggregator = base;
    std::string name = item;
    if (const auto colon = item.find(':'); colon != std::string::npos) {
      name = item.substr(0, colon);
      const std::string hops = item.substr(colon + 1);
      if (hops.empty() || hops.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("--methods: bad hop count in '" + item + "'");
      }
      e.aggregator.hops = std::stoi(hops);
    }
    if (name == "local") {
      e.mode = RunMode::LocalOnly;
    } else if (name == "centralized") {
      e.mode = RunMode::Centralized;
    } else {
      e.mode = RunMode::Federated;
      e.aggregator.kind = parse_aggregator_kind(name);
    }
    out.push_back(std::move(e));
  }
  if (out.empty()) throw ConfigError("--methods: empty list");
  return out;
}

std::vector<CompareRow> cmd_compare(const AppConfig& config,
                                    const std::vector<CompareEntry>& entries,
                                    const std::vector<std::uint64_t>& seeds) {
  AppConfig no_requirement = config;
  no_requirement.fed.mode = RunMode::LocalOnly;
  const Inputs in = load_inputs(no_requirement);
  const bool any_graph = std::any_of(entries.begin(), entries.end(), [](const auto& e) {
    return e.mode == RunMode::Federated && e.aggregator.kind != AggregatorKind::FedAvg;
  });
  if (any_graph && !in.graph) throw ConfigError("dataset.graph: required by graph-aware methods");

  std::vector<CompareRow> rows;
  for (const auto& e : entries) {
    CompareRow row;
    row.label = e.label;
    for (std::uint64_t seed : seeds) {
      FedConfig f = config.fed;
      f.mode = e.mode;
      f.aggregator = e.aggregator;
      f.seed = seed;
      f.config_hash.clear();
      const RunResult r = run(f, in.graph ? &*in.graph : nullptr, in.dataset);
      row.per_seed.push_back(r.final.last.test);
    }
    row.mae = mean_of(row.per_seed, &MetricReport::mae);
    row.mape = mean_of(row.per_seed, &MetricReport::mape);
    row.rmse = mean_of(row.per_seed, &MetricReport::rmse);
    double ss = 0.0;
    for (const auto& m : row.per_seed) ss += (m.rmse - row.rmse) * (m.rmse - row.rmse);
    row.rmse_std = row.per_seed.size() > 1
                       ? std::sqrt(ss / static_cast<double>(row.per_seed.size() - 1))
                       : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_compare(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << std::left << std::setw(18) << "method" << std::right << std::setw(10) << "MAE"
      << std::setw(10) << "MAPE%" << std::setw(10) << "RMSE" << std::setw(10) << "RMSE sd"
      << std::setw(7) << "seeds" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    out << std::left << std::setw(18) << r.label << std::right << std::setw(10) << r.mae
        << std::setw(10) << r.mape << std::setw(10) << r.rmse << std::setw(10) << r.rmse_std
        << std::setw(7) << r.per_seed.size() << '\n';
  }
  out << std::defaultfloat;
}

void write_compare_csv(const fs::path& path, const std::vector<CompareRow>& rows) {
  std::ostringstream s;
  s << std::setprecision(17) << "method,seed_index,mae,mape,rmse\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.per_seed.size(); ++k) {
      const auto& m = r.per_seed[k];
      s << r.label << ',' << k << ',' << m.mae << ',' << m.mape << ',' << m.rmse << '\n';
    }
  }
  write_text(path, s.str());
}

}  // namespace fedgraph::app
