// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fedgraph/digest.hpp"
#include "fedgraph/errors.hpp"
#include "json.hpp"

namespace fedgraph::app {

namespace {

using Json = nlohmann::ordered_json;

// Typed access to one JSON object; remembers which keys were read so the
// rest can be reported as unknown.
class Section {
 public:
  Section(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(obj_.at(key), key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as<T>(obj_.at(key), key);
  }

  Section child(const std::string& key) {
    static const Json empty = Json::object();
    if (!has(key)) return Section(empty, field(key));
    return Section(obj_.at(key), field(key));
  }

  void reject_unknown() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(field(item.key()) + ": unknown key");
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  template <typename T>
  T as(const Json& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
        const auto s = v.get<std::int64_t>();
        if (s < 0) throw ConfigError(field(key) + ": must be >= 0");
        return static_cast<T>(s);
      } else {
        return static_cast<T>(v.get<std::int64_t>());
      }
    } else {
      if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
      return v.get<double>();
    }
  }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

std::string_view convention_name(SplitConvention c) {
  return c == SplitConvention::StepRanges ? "steps" : "windows";
}

SplitConvention parse_convention(const std::string& s, const std::string& field) {
  if (s == "steps") return SplitConvention::StepRanges;
  if (s == "windows") return SplitConvention::WindowCount;
  throw ConfigError(field + ": expected \"steps\" or \"windows\"");
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json result_sections(const AppConfig& c) {
  const FedConfig& f = c.fed;
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = {
      {"series", c.series.string()},
      {"graph", c.graph ? Json(c.graph->string()) : Json(nullptr)},
      {"symmetrize", c.symmetrize},
      {"binarize_threshold", optional_json(c.binarize_threshold)},
      {"interval_min", optional_json(c.interval_min)},
      {"split", Json::array({f.split.train, f.split.val, f.split.test})},
      {"split_convention", convention_name(f.split_convention)},
      {"stride", f.stride},
  };
  j["model"] = {
      {"hidden_dim", f.arch.hidden_dim},
      {"num_layers", f.arch.num_layers},
      {"input_len", f.arch.input_len},
      {"output_len", f.arch.output_len},
  };
  j["training"] = {
      {"mode", to_string(f.mode)},
      {"rounds", f.rounds},
      {"local_epochs", f.local_epochs},
      {"batch_size", f.batch_size},
      {"lr", f.adam.lr},
      {"clip_norm", optional_json(f.clip_norm)},
      {"seed", f.seed},
      {"workers", f.workers},
      {"eval_batch_size", f.eval_batch_size},
  };
  j["aggregator"] = {
      {"kind", to_string(f.aggregator.kind)},
      {"hops", f.aggregator.hops},
      {"alpha", f.aggregator.alpha},
  };
  return j;
}

}  // namespace

AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(doc, "");
  if (!root.has("schema_version")) throw ConfigError("schema_version: required");
  const int version = root.get<int>("schema_version", 0);
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version: unsupported version " + std::to_string(version));
  }

  AppConfig c;
  FedConfig& f = c.fed;

  Section ds = root.child("dataset");
  if (!ds.has("series")) throw ConfigError("dataset.series: required");
  c.series = resolve(base_dir, ds.get<std::string>("series", ""));
  if (auto g = ds.optional<std::string>("graph")) c.graph = resolve(base_dir, *g);
  c.symmetrize = ds.get<bool>("symmetrize", true);
  c.binarize_threshold = ds.optional<double>("binarize_threshold");
  c.interval_min = ds.optional<double>("interval_min");
  if (ds.has("split")) {
    const Json& s = ds.raw("split");
    if (!s.is_array() || s.size() != 3 || !s[0].is_number() || !s[1].is_number() ||
        !s[2].is_number()) {
      throw ConfigError("dataset.split: expected three numbers [train, val, test]");
    }
    f.split = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
  }
  f.split_convention =
      parse_convention(ds.get<std::string>("split_convention", "steps"), "dataset.split_convention");
  f.stride = ds.get<std::size_t>("stride", 1);
  ds.reject_unknown();

  Section model = root.child("model");
  f.arch.hidden_dim = model.get<int>("hidden_dim", f.arch.hidden_dim);
  f.arch.num_layers = model.get<int>("num_layers", f.arch.num_layers);
  f.arch.input_len = model.get<int>("input_len", f.arch.input_len);
  f.arch.output_len = model.get<int>("output_len", f.arch.output_len);
  model.reject_unknown();

  Section tr = root.child("training");
  try {
    f.mode = parse_run_mode(tr.get<std::string>("mode", "federated"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("training.mode: ") + e.what());
  }
  f.rounds = tr.get<int>("rounds", f.rounds);
  f.local_epochs = tr.get<int>("local_epochs", f.local_epochs);
  f.batch_size = tr.get<std::size_t>("batch_size", f.batch_size);
  f.adam.lr = tr.get<double>("lr", f.adam.lr);
  f.clip_norm = tr.optional<double>("clip_norm");
  f.seed = tr.get<std::uint64_t>("seed", 0);
  f.workers = tr.get<int>("workers", 1);
  f.eval_batch_size = tr.get<std::size_t>("eval_batch_size", f.eval_batch_size);
  tr.reject_unknown();

  Section agg = root.child("aggregator");
  try {
    f.aggregator.kind = parse_aggregator_kind(agg.get<std::string>("kind", "fedavg"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("aggregator.kind: ") + e.what());
  }
  f.aggregator.hops = agg.get<int>("hops", f.aggregator.hops);
  f.aggregator.alpha = agg.get<double>("alpha", f.aggregator.alpha);
  agg.reject_unknown();

  Section out = root.child("output");
  c.out_dir = resolve(base_dir, out.get<std::string>("dir", c.out_dir.string()));
  c.checkpoint_every = out.get<int>("checkpoint_every", 0);
  c.dump_params = out.get<bool>("dump_params", false);
  out.reject_unknown();

  root.reject_unknown();

  if (c.checkpoint_every < 0) throw ConfigError("output.checkpoint_every: must be >= 0");
  if (c.interval_min && !(*c.interval_min > 0.0)) {
    throw ConfigError("dataset.interval_min: must be positive");
  }
  f.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::filesystem::absolute(path).parent_path());
}

std::string dump_config(const AppConfig& c) {
  Json j = result_sections(c);
  j["output"] = {
      {"dir", c.out_dir.string()},
      {"checkpoint_every", c.checkpoint_every},
      {"dump_params", c.dump_params},
  };
  return j.dump(2);
}

std::string config_hash(const AppConfig& c) {
  Json j = result_sections(c);
  j["training"].erase("workers");
  // Paths do not matter, contents do.
  j["dataset"]["series"] = file_digest(c.series);
  if (c.graph) j["dataset"]["graph"] = file_digest(*c.graph);
  return hex64(fnv1a64(j.dump()));
}

}  // namespace fedgraph::app
