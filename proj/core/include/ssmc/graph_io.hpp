#pragma once

#include <filesystem>
#include <string>

#include "ssmc/graph.hpp"

namespace ssmc {

/// Graph file format:
///   {"vertices":[{"id":0,"height":3,"depth":0},...],
///    "edges":[{"u":0,"v":1,"w":1.0},...],
///    "target":17}
/// "depth" and "target" are optional; "height_unit" is written only when it
/// differs from 1. Vertex ids must be exactly 0..n-1 (any order).
std::string graph_to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(const std::string& text);

void save_graph(const WeightedGraph& g, const std::filesystem::path& path);
WeightedGraph load_graph(const std::filesystem::path& path);

}  // namespace ssmc
