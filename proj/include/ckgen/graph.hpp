#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace ckgen {

using VertexId = std::size_t;
using EdgeId = std::size_t;

struct Edge {
  std::string name;
  VertexId src;
  VertexId rng;
};

/// Finite directed graph E = (E^0, E^1, r, s). Vertices and edges keep the
/// order in which they were added; all enumerations downstream use it.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  /// Throws InputError on a duplicate id.
  VertexId add_vertex(std::string name);
  /// Throws InputError on a duplicate id or an unknown endpoint.
  EdgeId add_edge(std::string name, std::string_view src, std::string_view rng);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::string& vertex_name(VertexId v) const { return vertices_.at(v); }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  const std::string& edge_name(EdgeId e) const { return edges_.at(e).name; }
  VertexId src(EdgeId e) const { return edges_.at(e).src; }
  VertexId rng(EdgeId e) const { return edges_.at(e).rng; }

  std::optional<VertexId> find_vertex(std::string_view name) const;
  std::optional<EdgeId> find_edge(std::string_view name) const;
  VertexId vertex(std::string_view name) const;
  EdgeId edge_by_name(std::string_view name) const;

  /// Edges with s(e) = v, in file order.
  const std::vector<EdgeId>& out_edges(VertexId v) const { return out_.at(v); }
  /// Edges with r(e) = v, in file order.
  const std::vector<EdgeId>& in_edges(VertexId v) const { return in_.at(v); }

  bool is_acyclic() const;
  /// Vertices lying on some directed cycle.
  std::vector<bool> on_cycle() const;
  /// Length of the longest path; only meaningful for acyclic graphs.
  std::size_t longest_path() const;

  nlohmann::json to_json() const;

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    if (a.vertices_ != b.vertices_ || a.edges_.size() != b.edges_.size()) return false;
    for (std::size_t i = 0; i < a.edges_.size(); ++i) {
      const Edge& x = a.edges_[i];
      const Edge& y = b.edges_[i];
      if (x.name != y.name || x.src != y.src || x.rng != y.rng) return false;
    }
    return true;
  }

 private:
  std::vector<std::string> vertices_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, VertexId> vertex_index_;
  std::unordered_map<std::string, EdgeId> edge_index_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
};

/// Parses the JSON graph format
///   {"vertices": [id, ...], "edges": [{"id": .., "src": .., "rng": ..}, ...]}
/// Errors carry the offending location (JSON pointer or byte offset).
DirectedGraph parse_graph(std::string_view text);
DirectedGraph load_graph(const std::string& path);

enum class VertexClass { Sink, Boundary, Interior };
enum class EdgeClass { SinkEdge, BoundaryEdge, InteriorEdge };

std::string_view to_string(VertexClass c);
std::string_view to_string(EdgeClass c);

/// Sink / boundary / interior taxonomy together with the enumerations used
/// by the generator. All indices into the nested vectors are 0-based; the
/// 1-based labels (w_m, f_{m,n}, V_l, e_{y,n}) are index + 1.
struct Classification {
  std::vector<VertexClass> vertex_class;
  std::vector<EdgeClass> edge_class;
  /// w_1, w_2, ... in vertex order.
  std::vector<VertexId> sinks;
  /// sink_edges[m][n] = f_{m+1,n+1}.
  std::vector<std::vector<EdgeId>> sink_edges;
  /// Boundary vertex -> m(v) (1-based).
  std::map<VertexId, std::size_t> m_of;
  /// V[l] = V_{l+1}; one entry per sink.
  std::vector<std::vector<VertexId>> V;
  /// Interior vertices emitting boundary edges, vertex order.
  std::vector<VertexId> Y;
  /// y -> e_{y,1}, e_{y,2}, ...
  std::map<VertexId, std::vector<EdgeId>> boundary_edges_by_source;
  std::vector<EdgeId> interior_edges;

  std::vector<VertexId> vertices_of(VertexClass c) const;
  std::vector<EdgeId> edges_of(EdgeClass c) const;
  bool is_sink(VertexId v) const { return vertex_class.at(v) == VertexClass::Sink; }
  bool has_sinks() const { return !sinks.empty(); }
  /// 0-based position of sink v in the w-enumeration.
  std::size_t sink_index(VertexId v) const;

  nlohmann::json to_json(const DirectedGraph& g) const;
};

Classification classify(const DirectedGraph& graph);

struct GraphValidation {
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  bool acyclic = true;
  std::vector<std::string> isolated;

  bool ok() const { return violations.empty(); }
  nlohmann::json to_json() const;
};

GraphValidation validate_graph(const DirectedGraph& graph);

}  // namespace ckgen
