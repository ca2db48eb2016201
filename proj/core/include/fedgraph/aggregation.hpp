// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fedgraph/graph.hpp"
#include "fedgraph/model.hpp"

namespace fedgraph {

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;

  std::size_t size() const noexcept;
  bool operator==(const TensorSpec&) const = default;
};

// Maps every parameter tensor of a GruSeq2Seq to a contiguous slice of one
// flat row. Order is encoder layers, decoder layers, output projection;
// each tensor is serialized row-major.
class ParamLayout {
 public:
  static ParamLayout for_arch(const GruArch& arch);

  const GruArch& arch() const noexcept { return arch_; }
  const std::vector<TensorSpec>& tensors() const noexcept { return tensors_; }
  std::size_t total_len() const noexcept { return total_len_; }

  bool operator==(const ParamLayout&) const = default;

 private:
  GruArch arch_;
  std::vector<TensorSpec> tensors_;
  std::size_t total_len_ = 0;
};

std::vector<double> flatten(const GruSeq2Seq& model, const ParamLayout& layout);
GruSeq2Seq unflatten(std::span<const double> row, const ParamLayout& layout);

// N x P matrix; row i holds client i's flattened parameters.
struct ParamMatrix {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  std::size_t n_clients() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t param_dim() const noexcept { return static_cast<std::size_t>(values.cols()); }

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * param_dim(), param_dim()};
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * param_dim(), param_dim()}; }
};

ParamMatrix collect(std::span<const GruSeq2Seq> models, const ParamLayout& layout);

enum class AggregatorKind { FedAvg, GraphFedAvg, MPFedAvg };

std::string_view to_string(AggregatorKind kind);
// Accepts "fedavg", "graphfedavg", "mpfedavg" (and "lpfedavg" as an alias).
AggregatorKind parse_aggregator_kind(std::string_view name);

struct AggregatorConfig {
  AggregatorKind kind = AggregatorKind::FedAvg;
  int hops = 1;        // graph-aware kinds only
  double alpha = 0.8;  // MPFedAvg only

  void validate() const;
};

// Every output row is the uniform column mean of X.
ParamMatrix fedavg(const ParamMatrix& x);

// Applies the row-normalized operator `hops` times; hops = 0 is the identity.
ParamMatrix graph_fedavg(const ParamMatrix& x, const PropagationMatrix& row_op, int hops);

// hops iterations of X <- alpha * S X + (1 - alpha) X with S the
// symmetric-normalized operator.
ParamMatrix mp_fedavg(const ParamMatrix& x, const PropagationMatrix& sym_op, double alpha,
                      int hops);

// Server-side operators for one graph, built once per run.
struct GraphOperators {
  PropagationMatrix row;
  PropagationMatrix sym;

  static GraphOperators from_graph(const SensorGraph& g);
};

ParamMatrix aggregate(const ParamMatrix& x, const AggregatorConfig& config,
                      const GraphOperators* ops);

// Debug dump: CSV with header client_id,offset,value.
void write_param_csv(const std::filesystem::path& path, const ParamMatrix& x);

}  // namespace fedgraph
