// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "fedgraph/errors.hpp"
#include "text_util.hpp"

namespace fedgraph {

std::size_t TensorSpec::size() const noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ParamLayout ParamLayout::for_arch(const GruArch& arch) {
  ParamLayout layout;
  layout.arch_ = arch;
  const GruSeq2Seq probe = GruSeq2Seq::zeros(arch);
  for (const TensorView& t : named_tensors(probe)) {
    TensorSpec spec{t.name, t.shape, layout.total_len_};
    layout.total_len_ += spec.size();
    layout.tensors_.push_back(std::move(spec));
  }
  return layout;
}

std::vector<double> flatten(const GruSeq2Seq& model, const ParamLayout& layout) {
  const auto tensors = named_tensors(model);
  const auto& specs = layout.tensors();
  const std::size_t common = std::min(tensors.size(), specs.size());
  for (std::size_t k = 0; k < common; ++k) {
    if (tensors[k].name != specs[k].name || tensors[k].shape != specs[k].shape) {
      throw LayoutError("tensor '" + specs[k].name +
                        "' does not match the model (found '" + tensors[k].name + "')");
    }
  }
  if (tensors.size() != specs.size()) {
    const std::string& name =
        tensors.size() > specs.size() ? tensors[common].name : specs[common].name;
    throw LayoutError("tensor count mismatch at '" + name + "'");
  }
  std::vector<double> row(layout.total_len());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    std::copy(tensors[k].data.begin(), tensors[k].data.end(),
              row.begin() + static_cast<std::ptrdiff_t>(specs[k].offset));
  }
  return row;
}

GruSeq2Seq unflatten(std::span<const double> row, const ParamLayout& layout) {
  if (row.size() != layout.total_len()) {
    throw LayoutError("row has length " + std::to_string(row.size()) + ", layout expects " +
                      std::to_string(layout.total_len()));
  }
  GruSeq2Seq model = GruSeq2Seq::zeros(layout.arch());
  // Storage blocks are laid out in the same order as the tensors, so the
  // row can be copied block by block.
  std::size_t offset = 0;
  for (auto block : parameter_blocks(model)) {
    std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(offset), block.size(), block.begin());
    offset += block.size();
  }
  return model;
}

ParamMatrix collect(std::span<const GruSeq2Seq> models, const ParamLayout& layout) {
  ParamMatrix x;
  x.values.resize(static_cast<Eigen::Index>(models.size()),
                  static_cast<Eigen::Index>(layout.total_len()));
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto row = flatten(models[i], layout);
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }
  return x;
}

std::string_view to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::FedAvg: return "fedavg";
    case AggregatorKind::GraphFedAvg: return "graphfedavg";
    case AggregatorKind::MPFedAvg: return "mpfedavg";
  }
  return "unknown";
}

AggregatorKind parse_aggregator_kind(std::string_view name) {
  if (name == "fedavg") return AggregatorKind::FedAvg;
  if (name == "graphfedavg") return AggregatorKind::GraphFedAvg;
  if (name == "mpfedavg" || name == "lpfedavg") return AggregatorKind::MPFedAvg;
  throw ConfigError("unknown aggregator '" + std::string(name) +
                    "' (expected fedavg, graphfedavg or mpfedavg)");
}

void AggregatorConfig::validate() const {
  if (hops < 0) throw ConfigError("aggregator hops must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("aggregator alpha must lie in [0,1]");
}

namespace {

void require_finite(const ParamMatrix& x, const char* where) {
  if (!x.values.allFinite()) {
    throw DivergedError(std::string(where) + ": parameter matrix contains NaN or Inf");
  }
}

void require_operator(const ParamMatrix& x, const PropagationMatrix& op, OperatorKind kind,
                      const char* where) {
  if (op.kind != kind) throw ShapeError(std::string(where) + ": wrong operator kind");
  if (op.n_nodes() != x.n_clients()) {
    throw ShapeError(std::string(where) + ": operator is " + std::to_string(op.n_nodes()) +
                     "x" + std::to_string(op.n_nodes()) + " but X has " +
                     std::to_string(x.n_clients()) + " rows");
  }
}

// out = op * in, summing each row over j in increasing order. The fixed
// order makes results independent of how rows might be distributed.
void propagate(const Eigen::MatrixXd& op, const ParamMatrix& in, ParamMatrix& out) {
  const std::size_t n = in.n_clients();
  const std::size_t p = in.param_dim();
  out.values.setZero(in.values.rows(), in.values.cols());
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = out.values.data() + i * p;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w == 0.0) continue;
      const double* src = in.values.data() + j * p;
      for (std::size_t c = 0; c < p; ++c) dst[c] += w * src[c];
    }
  }
}

}  // namespace

ParamMatrix fedavg(const ParamMatrix& x) {
  if (x.n_clients() == 0) throw ShapeError("fedavg: no clients");
  require_finite(x, "fedavg");
  const std::size_t n = x.n_clients();
  const std::size_t p = x.param_dim();
  // Same weights and summation order as graph_fedavg on a complete graph.
  const double w = 1.0 / static_cast<double>(n);
  std::vector<double> mean(p, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double* src = x.values.data() + j * p;
    for (std::size_t c = 0; c < p; ++c) mean[c] += w * src[c];
  }
  ParamMatrix out;
  out.values.resize(x.values.rows(), x.values.cols());
  for (std::size_t i = 0; i < n; ++i) std::copy(mean.begin(), mean.end(), out.row(i).begin());
  require_finite(out, "fedavg");
  return out;
}

ParamMatrix graph_fedavg(const ParamMatrix& x, const PropagationMatrix& row_op, int hops) {
  require_operator(x, row_op, OperatorKind::RowNormalized, "graph_fedavg");
  if (hops < 0) throw ConfigError("graph_fedavg: hops must be >= 0");
  require_finite(x, "graph_fedavg");
  ParamMatrix cur = x;
  ParamMatrix next;
  for (int l = 0; l < hops; ++l) {
    propagate(row_op.values, cur, next);
    std::swap(cur, next);
  }
  require_finite(cur, "graph_fedavg");
  return cur;
}

ParamMatrix mp_fedavg(const ParamMatrix& x, const PropagationMatrix& sym_op, double alpha,
                      int hops) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("mp_fedavg: alpha must lie in [0,1]");
  require_operator(x, sym_op, OperatorKind::SymNormalized, "mp_fedavg");
  if (hops < 0) throw ConfigError("mp_fedavg: hops must be >= 0");
  require_finite(x, "mp_fedavg");
  ParamMatrix cur = x;
  // 0 * S X + X would turn a -0.0 entry into +0.0; alpha = 0 must be exact.
  if (alpha == 0.0) return cur;
  ParamMatrix mixed;
  const double keep = 1.0 - alpha;
  for (int l = 0; l < hops; ++l) {
    propagate(sym_op.values, cur, mixed);
    const auto size = static_cast<std::size_t>(cur.values.size());
    double* c = cur.values.data();
    const double* m = mixed.values.data();
    for (std::size_t k = 0; k < size; ++k) c[k] = alpha * m[k] + keep * c[k];
  }
  require_finite(cur, "mp_fedavg");
  return cur;
}

GraphOperators GraphOperators::from_graph(const SensorGraph& g) {
  return {build_operator(g, OperatorKind::RowNormalized),
          build_operator(g, OperatorKind::SymNormalized)};
}

ParamMatrix aggregate(const ParamMatrix& x, const AggregatorConfig& config,
                      const GraphOperators* ops) {
  config.validate();
  switch (config.kind) {
    case AggregatorKind::FedAvg:
      return fedavg(x);
    case AggregatorKind::GraphFedAvg:
    case AggregatorKind::MPFedAvg:
      if (ops == nullptr) throw ConfigError("graph-aware aggregation requires a graph");
      return config.kind == AggregatorKind::GraphFedAvg
                 ? graph_fedavg(x, ops->row, config.hops)
                 : mp_fedavg(x, ops->sym, config.alpha, config.hops);
  }
  throw InternalError("unhandled aggregator kind");
}

void write_param_csv(const std::filesystem::path& path, const ParamMatrix& x) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "client_id,offset,value\n";
  for (std::size_t i = 0; i < x.n_clients(); ++i) {
    const auto row = x.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << i << ',' << c << ',' << detail::format_real(row[c]) << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace fedgraph
