// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fedgraph {

class Rng;

using NodeId = std::size_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;

  bool operator==(const Edge&) const = default;
};

// Client road-network graph. Node ids are dense in [0, n_nodes).
//
// Edges are kept sorted by (src, dst) and unique. When `symmetrized` is set
// the edge set is closed under reversal with equal weights in both
// directions.
class SensorGraph {
 public:
  SensorGraph() = default;
  // Validates and canonicalizes (sorts) the edge list. Throws
  // ValidationError on out-of-range ids, negative or non-finite weights,
  // self-loops and duplicate (src, dst) pairs.
  SensorGraph(std::size_t n_nodes, std::vector<Edge> edges,
              bool symmetrized = false);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool symmetrized() const noexcept { return symmetrized_; }

  // Dense weighted adjacency, A(src, dst) = weight.
  Eigen::MatrixXd adjacency() const;

 private:
  std::size_t n_nodes_ = 0;
  std::vector<Edge> edges_;
  bool symmetrized_ = false;
};

// Symmetric closure with weight max(w_ij, w_ji).
SensorGraph symmetrize(const SensorGraph& g);

// Keeps edges with weight >= threshold, setting their weight to 1.
SensorGraph binarize(const SensorGraph& g, double threshold);

// Reads the edge-list CSV:
//   # nodes=N
//   src,dst,weight
//   0,1,0.5
// Binarization (when requested) is applied before symmetrization.
SensorGraph load_graph(const std::filesystem::path& path, bool symmetrize = true,
                       std::optional<double> binarize_threshold = std::nullopt);
SensorGraph parse_graph(std::string_view text, bool symmetrize = true,
                        std::optional<double> binarize_threshold = std::nullopt);

void write_graph(const std::filesystem::path& path, const SensorGraph& g);

// True iff the undirected version of g (edges with positive weight) has a
// single connected component. The empty graph is not connected.
bool is_connected(const SensorGraph& g);

// Undirected generators, all with unit weights and symmetrized = true.
SensorGraph make_path(std::size_t n);
SensorGraph make_ring(std::size_t n);
SensorGraph make_complete(std::size_t n);
SensorGraph make_grid(std::size_t rows, std::size_t cols);
SensorGraph make_erdos_renyi(std::size_t n, double edge_prob, Rng& rng);

enum class OperatorKind { RowNormalized, SymNormalized };

// Dense N x N propagation operator built from A~ = A + I:
//   RowNormalized:  D~^-1 A~
//   SymNormalized:  D~^-1/2 A~ D~^-1/2
struct PropagationMatrix {
  OperatorKind kind = OperatorKind::RowNormalized;
  Eigen::MatrixXd values;

  std::size_t n_nodes() const noexcept {
    return static_cast<std::size_t>(values.rows());
  }
};

PropagationMatrix build_operator(const SensorGraph& g, OperatorKind kind);

// Degrees of A~ (row sums, self-loop included).
Eigen::VectorXd augmented_degrees(const SensorGraph& g);

}  // namespace fedgraph
