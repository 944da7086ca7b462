#include "ssmc/graph_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ssmc {

using nlohmann::json;

std::string graph_to_json(const WeightedGraph& g) {
  json vertices = json::array();
  for (std::size_t v = 0; v < g.size(); ++v) {
    json entry = {{"id", v}, {"height", g.height(static_cast<VertexId>(v))}};
    if (g.layered()) entry["depth"] = g.depth(static_cast<VertexId>(v));
    vertices.push_back(std::move(entry));
  }
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({{"u", e.u}, {"v", e.v}, {"w", e.w}});
  json doc = {{"vertices", std::move(vertices)}, {"edges", std::move(edges)}};
  if (g.target()) doc["target"] = *g.target();
  if (g.height_unit() != 1.0) doc["height_unit"] = g.height_unit();
  return doc.dump(1);
}

WeightedGraph graph_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("graph json: ") + e.what());
  }
  try {
    const json& vertices = doc.at("vertices");
    const std::size_t n = vertices.size();
    std::vector<int> heights(n, -1);
    std::vector<int> depths(n, -1);
    std::vector<char> seen(n, 0);
    std::size_t with_depth = 0;
    for (const json& entry : vertices) {
      const auto id = entry.at("id").get<std::size_t>();
      if (id >= n || seen[id]) {
        throw InvalidArgument("graph json: vertex ids must be a permutation of 0..n-1");
      }
      seen[id] = 1;
      heights[id] = entry.at("height").get<int>();
      if (entry.contains("depth")) {
        depths[id] = entry.at("depth").get<int>();
        ++with_depth;
      }
    }
    if (with_depth != 0 && with_depth != n) {
      throw InvalidArgument("graph json: depth must be given for all vertices or none");
    }
    std::vector<Edge> edges;
    for (const json& entry : doc.at("edges")) {
      edges.push_back(Edge{entry.at("u").get<VertexId>(), entry.at("v").get<VertexId>(),
                           entry.at("w").get<double>()});
    }
    std::optional<VertexId> target;
    if (doc.contains("target") && !doc["target"].is_null()) target = doc["target"].get<VertexId>();
    const double unit = doc.value("height_unit", 1.0);
    std::optional<std::vector<int>> depth_labels;
    if (with_depth == n && n > 0) depth_labels = std::move(depths);
    return WeightedGraph(n, std::move(edges), std::move(heights), std::move(depth_labels), target,
                         unit);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("graph json: ") + e.what());
  }
}

void save_graph(const WeightedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << graph_to_json(g) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

WeightedGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return graph_from_json(buffer.str());
}

}  // namespace ssmc
