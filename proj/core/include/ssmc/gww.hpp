#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ssmc/graph.hpp"
#include "ssmc/rng.hpp"

namespace ssmc {

/// Walkers of a Go-with-the-Winners run; all share one depth.
struct GwwState {
  std::vector<VertexId> positions;
  int depth = 0;
  Rng rng;

  GwwState() = default;
  GwwState(std::size_t walkers, VertexId start, int start_depth, std::uint64_t seed)
      : positions(walkers, start), depth(start_depth), rng(seed) {}
};

/// How a stranded walker is re-seeded: copy a uniform walker that moved
/// (walker-uniform) or jump to a uniform occupied node (node-uniform).
enum class GwwRule { walker_uniform, node_uniform };

struct GwwOptions {
  /// Child choice is uniform when empty; otherwise a child is drawn with
  /// probability proportional to child_weight(edge weight).
  std::function<double(double)> child_weight;
};

/// One walker-uniform step. Returns the output vertex (a uniform walker's
/// position) when every walker sits at a leaf, leaving the state unchanged.
std::optional<VertexId> gww_star_step(GwwState& s, const WeightedGraph& g,
                                      const GwwOptions& options = {});

/// One node-uniform step; same contract as gww_star_step.
std::optional<VertexId> gww_variant_step(GwwState& s, const WeightedGraph& g,
                                         const GwwOptions& options = {});

std::optional<VertexId> gww_step(GwwState& s, const WeightedGraph& g, GwwRule rule,
                                 const GwwOptions& options = {});

struct GwwResult {
  std::vector<VertexId> final_positions;
  VertexId output = 0;
  int final_depth = 0;
  bool success = false;  // some walker at the target when the run stopped
};

/// Runs from the root until every walker is at a leaf.
GwwResult run_gww(const WeightedGraph& g, std::size_t walkers, GwwRule rule, std::uint64_t seed,
                  const GwwOptions& options = {});

}  // namespace ssmc
