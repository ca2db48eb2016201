// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedgraph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <utility>

#include "fedgraph/errors.hpp"
#include "fedgraph/rng.hpp"
#include "text_util.hpp"

namespace fedgraph {

SensorGraph::SensorGraph(std::size_t n_nodes, std::vector<Edge> edges,
                         bool symmetrized)
    : n_nodes_(n_nodes), edges_(std::move(edges)), symmetrized_(symmetrized) {
  for (const Edge& e : edges_) {
    if (e.src >= n_nodes_ || e.dst >= n_nodes_) {
      throw ValidationError("edge (" + std::to_string(e.src) + "," +
                            std::to_string(e.dst) + ") references a node id >= " +
                            std::to_string(n_nodes_));
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw ValidationError("edge (" + std::to_string(e.src) + "," +
                            std::to_string(e.dst) +
                            ") has a negative or non-finite weight");
    }
    if (e.src == e.dst) {
      throw ValidationError("self-loop on node " + std::to_string(e.src) +
                            " (self-loops are added by the propagation operator)");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].src == edges_[k - 1].src && edges_[k].dst == edges_[k - 1].dst) {
      throw ValidationError("duplicate edge (" + std::to_string(edges_[k].src) +
                            "," + std::to_string(edges_[k].dst) + ")");
    }
  }
  if (symmetrized_) {
    for (const Edge& e : edges_) {
      auto it = std::lower_bound(
          edges_.begin(), edges_.end(), std::pair(e.dst, e.src),
          [](const Edge& a, const std::pair<NodeId, NodeId>& key) {
            return std::pair(a.src, a.dst) < key;
          });
      if (it == edges_.end() || it->src != e.dst || it->dst != e.src ||
          it->weight != e.weight) {
        throw ValidationError("graph flagged symmetrized but edge (" +
                              std::to_string(e.src) + "," + std::to_string(e.dst) +
                              ") has no matching reverse edge");
      }
    }
  }
}

Eigen::MatrixXd SensorGraph::adjacency() const {
  const auto n = static_cast<Eigen::Index>(n_nodes_);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : edges_) {
    a(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst)) = e.weight;
  }
  return a;
}

SensorGraph symmetrize(const SensorGraph& g) {
  std::map<std::pair<NodeId, NodeId>, double> closure;
  for (const Edge& e : g.edges()) {
    for (auto key : {std::pair(e.src, e.dst), std::pair(e.dst, e.src)}) {
      auto [it, inserted] = closure.emplace(key, e.weight);
      if (!inserted) it->second = std::max(it->second, e.weight);
    }
  }
  std::vector<Edge> edges;
  edges.reserve(closure.size());
  for (const auto& [key, w] : closure) edges.push_back({key.first, key.second, w});
  return SensorGraph(g.n_nodes(), std::move(edges), true);
}

SensorGraph binarize(const SensorGraph& g, double threshold) {
  std::vector<Edge> kept;
  for (const Edge& e : g.edges()) {
    if (e.weight >= threshold) kept.push_back({e.src, e.dst, 1.0});
  }
  // Thresholding preserves symmetry of a symmetric input.
  return SensorGraph(g.n_nodes(), std::move(kept), g.symmetrized());
}

SensorGraph parse_graph(std::string_view text, bool do_symmetrize,
                        std::optional<double> binarize_threshold) {
  detail::LineReader lines(text);
  std::string_view line;
  if (!lines.next(line)) throw ParseError("empty graph file", 1);
  const auto n_nodes = detail::parse_metadata_count(line, "nodes", lines.line_no());
  if (!lines.next(line)) throw ParseError("missing header line", lines.line_no() + 1);
  if (detail::trim(line) != "src,dst,weight") {
    throw ParseError("expected header 'src,dst,weight'", lines.line_no());
  }
  std::vector<Edge> edges;
  std::map<std::pair<NodeId, NodeId>, std::size_t> seen;
  while (lines.next(line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 3) {
      throw ParseError("expected 3 fields, found " + std::to_string(fields.size()),
                       lines.line_no());
    }
    const auto src = detail::parse_index(fields[0], lines.line_no());
    const auto dst = detail::parse_index(fields[1], lines.line_no());
    const double w = detail::parse_real(fields[2], lines.line_no());
    if (src >= n_nodes || dst >= n_nodes) {
      throw ValidationError("node id out of range [0," + std::to_string(n_nodes) +
                            ") at line " + std::to_string(lines.line_no()));
    }
    if (w < 0.0) {
      throw ValidationError("negative weight at line " +
                            std::to_string(lines.line_no()));
    }
    auto [it, inserted] = seen.emplace(std::pair(src, dst), lines.line_no());
    if (!inserted) {
      throw ValidationError("duplicate edge (" + std::to_string(src) + "," +
                            std::to_string(dst) + ") at line " +
                            std::to_string(lines.line_no()) + ", first seen at line " +
                            std::to_string(it->second));
    }
    edges.push_back({src, dst, w});
  }
  SensorGraph g(n_nodes, std::move(edges), false);
  if (binarize_threshold) g = binarize(g, *binarize_threshold);
  if (do_symmetrize) g = symmetrize(g);
  return g;
}

SensorGraph load_graph(const std::filesystem::path& path, bool do_symmetrize,
                       std::optional<double> binarize_threshold) {
  return parse_graph(detail::read_file(path), do_symmetrize, binarize_threshold);
}

void write_graph(const std::filesystem::path& path, const SensorGraph& g) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# nodes=" << g.n_nodes() << '\n' << "src,dst,weight\n";
  for (const Edge& e : g.edges()) {
    out << e.src << ',' << e.dst << ',' << detail::format_real(e.weight) << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

bool is_connected(const SensorGraph& g) {
  const std::size_t n = g.n_nodes();
  if (n == 0) return false;
  std::vector<std::vector<NodeId>> nbrs(n);
  for (const Edge& e : g.edges()) {
    if (e.weight <= 0.0) continue;
    nbrs[e.src].push_back(e.dst);
    nbrs[e.dst].push_back(e.src);
  }
  std::vector<bool> visited(n, false);
  std::queue<NodeId> frontier;
  frontier.push(0);
  visited[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    for (NodeId v : nbrs[u]) {
      if (!visited[v]) {
        visited[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

namespace {

SensorGraph undirected(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& pairs) {
  std::vector<Edge> edges;
  edges.reserve(2 * pairs.size());
  for (auto [u, v] : pairs) {
    edges.push_back({u, v, 1.0});
    edges.push_back({v, u, 1.0});
  }
  return SensorGraph(n, std::move(edges), true);
}

}  // namespace

SensorGraph make_path(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  return undirected(n, pairs);
}

SensorGraph make_ring(std::size_t n) {
  if (n < 3) return make_path(n);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(i, (i + 1) % n);
  return undirected(n, pairs);
}

SensorGraph make_complete(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return undirected(n, pairs);
}

SensorGraph make_grid(std::size_t rows, std::size_t cols) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const NodeId u = r * cols + c;
      if (c + 1 < cols) pairs.emplace_back(u, u + 1);
      if (r + 1 < rows) pairs.emplace_back(u, u + cols);
    }
  }
  return undirected(rows * cols, pairs);
}

SensorGraph make_erdos_renyi(std::size_t n, double edge_prob, Rng& rng) {
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw ConfigError("edge probability must lie in [0,1]");
  }
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < edge_prob) pairs.emplace_back(i, j);
  return undirected(n, pairs);
}

Eigen::VectorXd augmented_degrees(const SensorGraph& g) {
  Eigen::VectorXd deg = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.n_nodes()));
  for (const Edge& e : g.edges()) deg(static_cast<Eigen::Index>(e.src)) += e.weight;
  return deg;
}

PropagationMatrix build_operator(const SensorGraph& g, OperatorKind kind) {
  Eigen::MatrixXd a_tilde = g.adjacency();
  a_tilde.diagonal().array() += 1.0;
  // Row sums taken after augmentation, so every degree is >= 1.
  const Eigen::VectorXd deg = a_tilde.rowwise().sum();

  PropagationMatrix op;
  op.kind = kind;
  op.values.resizeLike(a_tilde);
  const Eigen::Index n = a_tilde.rows();
  if (kind == OperatorKind::RowNormalized) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) op.values(i, j) = a_tilde(i, j) / deg(i);
  } else {
    const Eigen::VectorXd inv_sqrt = deg.array().sqrt().inverse();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        op.values(i, j) = a_tilde(i, j) * inv_sqrt(i) * inv_sqrt(j);
  }
  return op;
}

}  // namespace fedgraph
