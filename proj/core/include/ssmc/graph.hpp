#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/common.hpp"

namespace ssmc {

struct Edge {
  VertexId u = 0;
  VertexId v = 0;
  double w = 1.0;  // transition rate, strictly positive
};

struct Neighbor {
  VertexId to = 0;
  double w = 1.0;
};

/// Undirected weighted search graph with an integer "height" per vertex.
///
/// The objective of vertex x is `scale * height_unit * height(x)`; the energy
/// scale is supplied by whoever consumes the graph so that sweeps over E never
/// regenerate it. Layered graphs additionally carry a depth per vertex and
/// every edge joins consecutive depths.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  WeightedGraph(std::size_t vertex_count, std::vector<Edge> edges, std::vector<int> heights,
                std::optional<std::vector<int>> depths = std::nullopt,
                std::optional<VertexId> target = std::nullopt, double height_unit = 1.0);

  std::size_t size() const { return heights_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(VertexId v) const;
  std::size_t degree(VertexId v) const { return neighbors(v).size(); }
  std::size_t max_degree() const { return max_degree_; }

  int height(VertexId v) const { return heights_.at(v); }
  const std::vector<int>& heights() const { return heights_; }
  double height_unit() const { return height_unit_; }
  double objective(VertexId v, double scale = 1.0) const {
    return scale * height_unit_ * heights_[v];
  }
  std::vector<double> objective_vector(double scale = 1.0) const;

  bool layered() const { return depths_.has_value(); }
  int depth(VertexId v) const;
  const std::vector<int>& depths() const;
  int max_depth() const { return max_depth_; }
  /// Vertices at depth j in increasing id order (empty when out of range).
  std::span<const VertexId> layer(int j) const;
  /// Neighbors one layer deeper. Requires depth labels.
  std::vector<Neighbor> children(VertexId v) const;
  std::size_t child_count(VertexId v) const;
  bool is_leaf(VertexId v) const { return child_count(v) == 0; }
  std::optional<VertexId> parent(VertexId v) const;
  std::optional<VertexId> root() const;

  std::optional<VertexId> target() const { return target_; }

  /// Weight of edge {u,v}, or nullopt.
  std::optional<double> weight(VertexId u, VertexId v) const;

  bool connected() const;
  bool operator==(const WeightedGraph& other) const;

 private:
  void check_vertex(VertexId v, const char* what) const;

  std::vector<Edge> edges_;
  std::vector<int> heights_;
  std::optional<std::vector<int>> depths_;
  std::optional<VertexId> target_;
  double height_unit_ = 1.0;

  std::vector<std::size_t> adjacency_offsets_;
  std::vector<Neighbor> adjacency_;
  std::vector<std::vector<VertexId>> layers_;
  std::size_t max_degree_ = 0;
  int max_depth_ = -1;
};

/// Dense combinatorial Laplacian on an ordered vertex subset:
/// off-diagonal (y,x) = -w_yx, diagonal = sum of incident weights inside the
/// subset, so every column sums to zero.
struct Laplacian {
  std::vector<VertexId> support;
  Eigen::MatrixXd matrix;

  std::size_t size() const { return support.size(); }
  /// Position of v in `support`, or nullopt.
  std::optional<std::size_t> index_of(VertexId v) const;
  /// Copy into a |V| x |V| matrix (zero outside the support).
  Eigen::MatrixXd embedded(std::size_t vertex_count) const;
};

/// Laplacian restricted to edges with both endpoints in `support`.
Laplacian laplacian(const WeightedGraph& g, std::span<const VertexId> support);
Laplacian laplacian(const WeightedGraph& g);

/// Laplacian of the stage-j subgraph: vertices V_{j-1} ∪ V_j and the edges
/// between those two layers.
Laplacian stage_subgraph(const WeightedGraph& g, int j);

/// Edges of the stage-j subgraph (between depth j-1 and depth j).
std::vector<Edge> stage_edges(const WeightedGraph& g, int j);

// ---- generators ----------------------------------------------------------

/// Comb tree of depth D: spine s_0..s_D (s_0 is the root), one tooth hanging
/// off each s_j for j < D. By default the root's tooth has length D-1 and the
/// others length 1. The target is s_D.
WeightedGraph make_comb(int depth, const std::map<int, int>& tooth_lengths = {});

/// Waterfall comb of depth D: spine s_0..s_D and a tooth off each s_j (j < D)
/// running down to depth D, so every leaf sits at depth D. The target is s_D.
WeightedGraph make_waterfall(int depth);

/// n-dimensional hypercube; vertex id is the bit string, height is its Hamming
/// weight and the height unit is 1/n so objectives lie in [0, 1].
WeightedGraph make_hypercube(int n, int max_dimension = 16);

/// Full `arity`-ary tree of the given depth with uniform edge weight.
WeightedGraph make_full_tree(int depth, int arity = 2, double weight = 1.0);

/// Root with one child per entry of `weights`.
WeightedGraph make_star(std::span<const double> weights);

/// Layered path root -> ... of `length` edges.
WeightedGraph make_path(int length, double weight = 1.0);

/// Random layered tree: every vertex above `depth` gets between min_children
/// and max_children children; weights uniform in [w_min, w_max].
WeightedGraph make_random_tree(int depth, int min_children, int max_children, double w_min,
                               double w_max, std::uint64_t seed);

}  // namespace ssmc
