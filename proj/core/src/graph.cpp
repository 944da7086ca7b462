#include "ssmc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "ssmc/rng.hpp"

namespace ssmc {

WeightedGraph::WeightedGraph(std::size_t vertex_count, std::vector<Edge> edges,
                             std::vector<int> heights, std::optional<std::vector<int>> depths,
                             std::optional<VertexId> target, double height_unit)
    : edges_(std::move(edges)),
      heights_(std::move(heights)),
      depths_(std::move(depths)),
      target_(target),
      height_unit_(height_unit) {
  if (heights_.size() != vertex_count) {
    throw InvalidArgument("graph: expected " + std::to_string(vertex_count) + " heights, got " +
                          std::to_string(heights_.size()));
  }
  if (!(height_unit_ > 0.0) || !std::isfinite(height_unit_)) {
    throw InvalidArgument("graph: height unit must be positive and finite");
  }
  for (int h : heights_) {
    if (h < 0) throw InvalidArgument("graph: heights must be nonnegative");
  }
  if (target_) check_vertex(*target_, "target");

  std::set<std::pair<VertexId, VertexId>> seen;
  std::vector<std::size_t> degree(vertex_count, 0);
  for (const Edge& e : edges_) {
    check_vertex(e.u, "edge endpoint");
    check_vertex(e.v, "edge endpoint");
    if (e.u == e.v) throw InvalidArgument("graph: self-loop at vertex " + std::to_string(e.u));
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      throw InvalidArgument("graph: edge weights must be strictly positive and finite");
    }
    const auto key = std::minmax(e.u, e.v);
    if (!seen.insert(key).second) {
      throw InvalidArgument("graph: duplicate edge {" + std::to_string(key.first) + "," +
                            std::to_string(key.second) + "}");
    }
    ++degree[e.u];
    ++degree[e.v];
  }

  adjacency_offsets_.assign(vertex_count + 1, 0);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    adjacency_offsets_[v + 1] = adjacency_offsets_[v] + degree[v];
  }
  adjacency_.resize(adjacency_offsets_.back());
  std::vector<std::size_t> fill(adjacency_offsets_.begin(), adjacency_offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[fill[e.u]++] = Neighbor{e.v, e.w};
    adjacency_[fill[e.v]++] = Neighbor{e.u, e.w};
  }
  for (std::size_t v = 0; v < vertex_count; ++v) {
    auto first = adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[v]);
    auto last = adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[v + 1]);
    std::sort(first, last, [](const Neighbor& a, const Neighbor& b) { return a.to < b.to; });
    max_degree_ = std::max(max_degree_, degree[v]);
  }

  if (depths_) {
    if (depths_->size() != vertex_count) {
      throw InvalidArgument("graph: depth labels must cover every vertex");
    }
    for (int d : *depths_) {
      if (d < 0) throw InvalidArgument("graph: depths must be nonnegative");
      max_depth_ = std::max(max_depth_, d);
    }
    for (const Edge& e : edges_) {
      if (std::abs((*depths_)[e.u] - (*depths_)[e.v]) != 1) {
        throw InvalidArgument("graph: edge {" + std::to_string(e.u) + "," + std::to_string(e.v) +
                              "} does not join consecutive layers");
      }
    }
    layers_.assign(static_cast<std::size_t>(max_depth_ + 1), {});
    for (std::size_t v = 0; v < vertex_count; ++v) {
      layers_[static_cast<std::size_t>((*depths_)[v])].push_back(static_cast<VertexId>(v));
    }
    if (vertex_count > 0 && layers_[0].size() != 1) {
      throw InvalidArgument("graph: layered graphs need exactly one depth-0 root");
    }
  }
}

void WeightedGraph::check_vertex(VertexId v, const char* what) const {
  if (v >= size()) {
    throw InvalidArgument(std::string("graph: ") + what + " " + std::to_string(v) +
                          " out of range");
  }
}

std::span<const Neighbor> WeightedGraph::neighbors(VertexId v) const {
  check_vertex(v, "vertex");
  return {adjacency_.data() + adjacency_offsets_[v],
          adjacency_offsets_[v + 1] - adjacency_offsets_[v]};
}

std::vector<double> WeightedGraph::objective_vector(double scale) const {
  std::vector<double> out(size());
  for (std::size_t v = 0; v < size(); ++v) out[v] = objective(static_cast<VertexId>(v), scale);
  return out;
}

int WeightedGraph::depth(VertexId v) const {
  if (!depths_) throw InvalidArgument("graph: no depth labels");
  check_vertex(v, "vertex");
  return (*depths_)[v];
}

const std::vector<int>& WeightedGraph::depths() const {
  if (!depths_) throw InvalidArgument("graph: no depth labels");
  return *depths_;
}

std::span<const VertexId> WeightedGraph::layer(int j) const {
  if (!depths_) throw InvalidArgument("graph: no depth labels");
  if (j < 0 || j > max_depth_) return {};
  return layers_[static_cast<std::size_t>(j)];
}

std::vector<Neighbor> WeightedGraph::children(VertexId v) const {
  const int d = depth(v);
  std::vector<Neighbor> out;
  for (const Neighbor& n : neighbors(v)) {
    if ((*depths_)[n.to] == d + 1) out.push_back(n);
  }
  return out;
}

std::size_t WeightedGraph::child_count(VertexId v) const {
  const int d = depth(v);
  std::size_t count = 0;
  for (const Neighbor& n : neighbors(v)) {
    if ((*depths_)[n.to] == d + 1) ++count;
  }
  return count;
}

std::optional<VertexId> WeightedGraph::parent(VertexId v) const {
  const int d = depth(v);
  for (const Neighbor& n : neighbors(v)) {
    if ((*depths_)[n.to] == d - 1) return n.to;
  }
  return std::nullopt;
}

std::optional<VertexId> WeightedGraph::root() const {
  if (!depths_ || layers_.empty()) return std::nullopt;
  return layers_[0].front();
}

std::optional<double> WeightedGraph::weight(VertexId u, VertexId v) const {
  for (const Neighbor& n : neighbors(u)) {
    if (n.to == v) return n.w;
  }
  return std::nullopt;
}

bool WeightedGraph::connected() const {
  if (size() == 0) return true;
  std::vector<char> seen(size(), 0);
  std::deque<VertexId> queue{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    for (const Neighbor& n : neighbors(v)) {
      if (!seen[n.to]) {
        seen[n.to] = 1;
        ++count;
        queue.push_back(n.to);
      }
    }
  }
  return count == size();
}

bool WeightedGraph::operator==(const WeightedGraph& other) const {
  if (size() != other.size() || heights_ != other.heights_ || depths_ != other.depths_ ||
      target_ != other.target_ || height_unit_ != other.height_unit_ ||
      edges_.size() != other.edges_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& a = edges_[i];
    const Edge& b = other.edges_[i];
    if (a.u != b.u || a.v != b.v || a.w != b.w) return false;
  }
  return true;
}

std::optional<std::size_t> Laplacian::index_of(VertexId v) const {
  const auto it = std::find(support.begin(), support.end(), v);
  if (it == support.end()) return std::nullopt;
  return static_cast<std::size_t>(it - support.begin());
}

Eigen::MatrixXd Laplacian::embedded(std::size_t vertex_count) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vertex_count),
                                              static_cast<Eigen::Index>(vertex_count));
  for (std::size_t a = 0; a < support.size(); ++a) {
    for (std::size_t b = 0; b < support.size(); ++b) {
      out(support[a], support[b]) =
          matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

namespace {

Laplacian laplacian_from_edges(std::size_t vertex_count, std::span<const Edge> edges,
                               std::span<const VertexId> support) {
  std::vector<std::ptrdiff_t> position(vertex_count, -1);
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] >= vertex_count) {
      throw InvalidArgument("laplacian: unknown vertex id " + std::to_string(support[i]));
    }
    if (position[support[i]] >= 0) {
      throw InvalidArgument("laplacian: vertex " + std::to_string(support[i]) +
                            " listed twice in support");
    }
    position[support[i]] = static_cast<std::ptrdiff_t>(i);
  }
  Laplacian out;
  out.support.assign(support.begin(), support.end());
  const auto n = static_cast<Eigen::Index>(support.size());
  out.matrix = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : edges) {
    const std::ptrdiff_t a = position[e.u];
    const std::ptrdiff_t b = position[e.v];
    if (a < 0 || b < 0) continue;
    out.matrix(a, b) -= e.w;
    out.matrix(b, a) -= e.w;
    out.matrix(a, a) += e.w;
    out.matrix(b, b) += e.w;
  }
  return out;
}

}  // namespace

Laplacian laplacian(const WeightedGraph& g, std::span<const VertexId> support) {
  return laplacian_from_edges(g.size(), g.edges(), support);
}

Laplacian laplacian(const WeightedGraph& g) {
  std::vector<VertexId> all(g.size());
  std::iota(all.begin(), all.end(), VertexId{0});
  return laplacian(g, all);
}

std::vector<Edge> stage_edges(const WeightedGraph& g, int j) {
  std::vector<Edge> out;
  for (const Edge& e : g.edges()) {
    const int du = g.depth(e.u);
    const int dv = g.depth(e.v);
    if (std::min(du, dv) == j - 1 && std::max(du, dv) == j) out.push_back(e);
  }
  return out;
}

Laplacian stage_subgraph(const WeightedGraph& g, int j) {
  if (!g.layered()) throw InvalidArgument("stage_subgraph: graph has no depth labels");
  if (j < 1) throw InvalidArgument("stage_subgraph: stage index must be >= 1");
  if (j > g.max_depth()) {
    throw InvalidArgument("stage_subgraph: stage " + std::to_string(j) + " exceeds graph depth " +
                          std::to_string(g.max_depth()));
  }
  std::vector<VertexId> support;
  const auto upper = g.layer(j - 1);
  const auto lower = g.layer(j);
  support.insert(support.end(), upper.begin(), upper.end());
  support.insert(support.end(), lower.begin(), lower.end());
  std::sort(support.begin(), support.end());
  const std::vector<Edge> edges = stage_edges(g, j);
  return laplacian_from_edges(g.size(), edges, support);
}

// ---- generators ----------------------------------------------------------

namespace {

/// Collects a rooted tree in arbitrary order, then relabels vertices
/// breadth-first (children in insertion order) so ids are reproducible.
class TreeBuilder {
 public:
  std::size_t add_root() {
    parent_.push_back(-1);
    weight_.push_back(0.0);
    children_.emplace_back();
    return 0;
  }

  std::size_t add_child(std::size_t parent, double w) {
    const std::size_t id = parent_.size();
    parent_.push_back(static_cast<std::ptrdiff_t>(parent));
    weight_.push_back(w);
    children_.emplace_back();
    children_[parent].push_back(id);
    return id;
  }

  std::size_t add_chain(std::size_t from, int length, double w) {
    std::size_t at = from;
    for (int i = 0; i < length; ++i) at = add_child(at, w);
    return at;
  }

  WeightedGraph build(std::optional<std::size_t> target = std::nullopt) const {
    const std::size_t n = parent_.size();
    std::vector<VertexId> relabel(n, 0);
    std::vector<int> depth_of(n, 0);
    std::vector<std::size_t> order;
    order.reserve(n);
    std::deque<std::size_t> queue{0};
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      relabel[v] = static_cast<VertexId>(order.size());
      order.push_back(v);
      for (std::size_t c : children_[v]) {
        depth_of[c] = depth_of[v] + 1;
        queue.push_back(c);
      }
    }
    const int max_depth = *std::max_element(depth_of.begin(), depth_of.end());

    std::vector<Edge> edges;
    edges.reserve(n - 1);
    std::vector<int> heights(n);
    std::vector<int> depths(n);
    for (std::size_t new_id = 0; new_id < n; ++new_id) {
      const std::size_t old = order[new_id];
      depths[new_id] = depth_of[old];
      heights[new_id] = max_depth - depth_of[old];
      if (parent_[old] >= 0) {
        edges.push_back(Edge{relabel[static_cast<std::size_t>(parent_[old])],
                             static_cast<VertexId>(new_id), weight_[old]});
      }
    }
    std::optional<VertexId> mapped_target;
    if (target) mapped_target = relabel[*target];
    return WeightedGraph(n, std::move(edges), std::move(heights), std::move(depths),
                         mapped_target);
  }

 private:
  std::vector<std::ptrdiff_t> parent_;
  std::vector<double> weight_;
  std::vector<std::vector<std::size_t>> children_;
};

}  // namespace

WeightedGraph make_comb(int depth, const std::map<int, int>& tooth_lengths) {
  if (depth < 2) throw InvalidArgument("make_comb: depth must be >= 2");
  std::map<int, int> lengths;
  lengths[0] = depth - 1;
  for (int j = 1; j < depth; ++j) lengths[j] = 1;
  for (const auto& [j, len] : tooth_lengths) {
    if (j < 0 || j >= depth) {
      throw InvalidArgument("make_comb: tooth at spine depth " + std::to_string(j) +
                            " is outside the spine");
    }
    if (len < 1 || j + len > depth) {
      throw InvalidArgument("make_comb: tooth length " + std::to_string(len) + " at depth " +
                            std::to_string(j) + " must be in [1, D - j]");
    }
    lengths[j] = len;
  }

  TreeBuilder b;
  std::size_t spine = b.add_root();
  for (int j = 0; j < depth; ++j) {
    b.add_chain(spine, lengths[j], 1.0);  // tooth on the left
    spine = b.add_child(spine, 1.0);      // spine continues on the right
  }
  return b.build(spine);
}

WeightedGraph make_waterfall(int depth) {
  if (depth < 2) throw InvalidArgument("make_waterfall: depth must be >= 2");
  TreeBuilder b;
  std::size_t spine = b.add_root();
  for (int j = 0; j < depth; ++j) {
    b.add_chain(spine, depth - j, 1.0);
    spine = b.add_child(spine, 1.0);
  }
  return b.build(spine);
}

WeightedGraph make_hypercube(int n, int max_dimension) {
  if (n < 1) throw InvalidArgument("make_hypercube: dimension must be >= 1");
  if (n > max_dimension) {
    throw InvalidArgument("make_hypercube: dimension " + std::to_string(n) +
                          " exceeds the size cap " + std::to_string(max_dimension));
  }
  const std::size_t count = std::size_t{1} << n;
  std::vector<Edge> edges;
  edges.reserve(count * static_cast<std::size_t>(n) / 2);
  std::vector<int> heights(count);
  for (std::size_t v = 0; v < count; ++v) {
    heights[v] = std::popcount(v);
    for (int bit = 0; bit < n; ++bit) {
      const std::size_t u = v ^ (std::size_t{1} << bit);
      if (v < u) edges.push_back(Edge{static_cast<VertexId>(v), static_cast<VertexId>(u), 1.0});
    }
  }
  return WeightedGraph(count, std::move(edges), std::move(heights), std::nullopt, VertexId{0},
                       1.0 / n);
}

WeightedGraph make_full_tree(int depth, int arity, double weight) {
  if (depth < 0 || arity < 1) throw InvalidArgument("make_full_tree: bad shape");
  TreeBuilder b;
  std::vector<std::size_t> frontier{b.add_root()};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::size_t> next;
    for (std::size_t v : frontier) {
      for (int k = 0; k < arity; ++k) next.push_back(b.add_child(v, weight));
    }
    frontier = std::move(next);
  }
  return b.build();
}

WeightedGraph make_star(std::span<const double> weights) {
  if (weights.empty()) throw InvalidArgument("make_star: need at least one child");
  TreeBuilder b;
  const std::size_t root = b.add_root();
  for (double w : weights) b.add_child(root, w);
  return b.build();
}

WeightedGraph make_path(int length, double weight) {
  if (length < 1) throw InvalidArgument("make_path: length must be >= 1");
  TreeBuilder b;
  const std::size_t end = b.add_chain(b.add_root(), length, weight);
  return b.build(end);
}

WeightedGraph make_random_tree(int depth, int min_children, int max_children, double w_min,
                               double w_max, std::uint64_t seed) {
  if (depth < 1 || min_children < 0 || max_children < std::max(1, min_children) ||
      !(w_min > 0.0) || w_max < w_min) {
    throw InvalidArgument("make_random_tree: bad parameters");
  }
  Rng rng(seed);
  TreeBuilder b;
  std::vector<std::size_t> frontier{b.add_root()};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::size_t> next;
    for (std::size_t v : frontier) {
      const auto span = static_cast<std::size_t>(max_children - min_children + 1);
      const int k = min_children + static_cast<int>(rng.index(span));
      for (int c = 0; c < k; ++c) {
        next.push_back(b.add_child(v, w_min + (w_max - w_min) * rng.uniform()));
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  return b.build();
}

}  // namespace ssmc
