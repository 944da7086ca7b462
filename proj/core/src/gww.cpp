#include "ssmc/gww.hpp"

#include <algorithm>

namespace ssmc {

namespace {

VertexId pick_child(const std::vector<Neighbor>& kids, Rng& rng, const GwwOptions& options) {
  if (!options.child_weight) return kids[rng.index(kids.size())].to;
  double total = 0.0;
  for (const Neighbor& c : kids) total += options.child_weight(c.w);
  if (!(total > 0.0)) throw InvalidArgument("gww: child weights sum to zero");
  double u = rng.uniform() * total;
  for (const Neighbor& c : kids) {
    const double w = options.child_weight(c.w);
    if (u < w) return c.to;
    u -= w;
  }
  return kids.back().to;
}

}  // namespace

std::optional<VertexId> gww_step(GwwState& s, const WeightedGraph& g, GwwRule rule,
                                 const GwwOptions& options) {
  if (!g.layered()) throw InvalidArgument("gww: graph has no depth labels");
  if (s.positions.empty()) throw InvalidArgument("gww: empty population");

  std::vector<std::size_t> movers;
  std::vector<char> stranded(s.positions.size(), 0);
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    if (g.depth(s.positions[i]) != s.depth) {
      throw InvalidArgument("gww: walkers are not on a common layer");
    }
    if (g.is_leaf(s.positions[i])) {
      stranded[i] = 1;
    } else {
      movers.push_back(i);
    }
  }
  if (movers.empty()) return s.positions[s.rng.index(s.positions.size())];

  for (std::size_t i : movers) s.positions[i] = pick_child(g.children(s.positions[i]), s.rng, options);

  if (rule == GwwRule::walker_uniform) {
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      if (stranded[i]) s.positions[i] = s.positions[movers[s.rng.index(movers.size())]];
    }
  } else {
    std::vector<VertexId> nodes;
    nodes.reserve(movers.size());
    for (std::size_t i : movers) nodes.push_back(s.positions[i]);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      if (stranded[i]) s.positions[i] = nodes[s.rng.index(nodes.size())];
    }
  }
  ++s.depth;
  return std::nullopt;
}

std::optional<VertexId> gww_star_step(GwwState& s, const WeightedGraph& g,
                                      const GwwOptions& options) {
  return gww_step(s, g, GwwRule::walker_uniform, options);
}

std::optional<VertexId> gww_variant_step(GwwState& s, const WeightedGraph& g,
                                         const GwwOptions& options) {
  return gww_step(s, g, GwwRule::node_uniform, options);
}

GwwResult run_gww(const WeightedGraph& g, std::size_t walkers, GwwRule rule, std::uint64_t seed,
                  const GwwOptions& options) {
  if (walkers < 1) throw InvalidArgument("run_gww: need at least one walker");
  const auto root = g.root();
  if (!root) throw InvalidArgument("run_gww: graph has no root");
  GwwState s(walkers, *root, 0, seed);
  GwwResult result;
  while (true) {
    const auto out = gww_step(s, g, rule, options);
    if (out) {
      result.output = *out;
      break;
    }
  }
  result.final_positions = s.positions;
  result.final_depth = s.depth;
  if (const auto target = g.target()) {
    result.success =
        std::find(s.positions.begin(), s.positions.end(), *target) != s.positions.end();
  }
  return result;
}

}  // namespace ssmc
