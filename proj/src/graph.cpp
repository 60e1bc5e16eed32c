#include "ckgen/graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "ckgen/error.hpp"

namespace ckgen {

VertexId DirectedGraph::add_vertex(std::string name) {
  if (vertex_index_.count(name) != 0) {
    throw InputError("duplicate vertex id \"" + name + "\"");
  }
  const VertexId v = vertices_.size();
  vertex_index_.emplace(name, v);
  vertices_.push_back(std::move(name));
  out_.emplace_back();
  in_.emplace_back();
  return v;
}

EdgeId DirectedGraph::add_edge(std::string name, std::string_view src,
                               std::string_view rng) {
  if (edge_index_.count(name) != 0) {
    throw InputError("duplicate edge id \"" + name + "\"");
  }
  const auto s = find_vertex(src);
  if (!s) throw InputError("dangling endpoint \"" + std::string(src) + "\" (src of edge \"" + name + "\")");
  const auto r = find_vertex(rng);
  if (!r) throw InputError("dangling endpoint \"" + std::string(rng) + "\" (rng of edge \"" + name + "\")");
  const EdgeId e = edges_.size();
  edge_index_.emplace(name, e);
  edges_.push_back({std::move(name), *s, *r});
  out_[*s].push_back(e);
  in_[*r].push_back(e);
  return e;
}

std::optional<VertexId> DirectedGraph::find_vertex(std::string_view name) const {
  auto it = vertex_index_.find(std::string(name));
  if (it == vertex_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeId> DirectedGraph::find_edge(std::string_view name) const {
  auto it = edge_index_.find(std::string(name));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

VertexId DirectedGraph::vertex(std::string_view name) const {
  auto v = find_vertex(name);
  if (!v) throw InputError("unknown vertex \"" + std::string(name) + "\"");
  return *v;
}

EdgeId DirectedGraph::edge_by_name(std::string_view name) const {
  auto e = find_edge(name);
  if (!e) throw InputError("unknown edge \"" + std::string(name) + "\"");
  return *e;
}

bool DirectedGraph::is_acyclic() const {
  const auto cyc = on_cycle();
  return std::none_of(cyc.begin(), cyc.end(), [](bool b) { return b; });
}

std::vector<bool> DirectedGraph::on_cycle() const {
  // Tarjan's strongly connected components; a vertex is on a cycle iff its
  // component has more than one vertex or it carries a loop.
  const std::size_t n = num_vertices();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false), result(n, false);
  std::vector<VertexId> stack;
  int counter = 0;

  std::function<void(VertexId)> visit = [&](VertexId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (EdgeId e : out_[v]) {
      const VertexId w = edges_[e].rng;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<VertexId> comp;
      VertexId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      if (comp.size() > 1) {
        for (VertexId x : comp) result[x] = true;
      }
    }
  };
  for (VertexId v = 0; v < n; ++v) {
    if (index[v] < 0) visit(v);
  }
  for (const Edge& e : edges_) {
    if (e.src == e.rng) result[e.src] = true;
  }
  return result;
}

std::size_t DirectedGraph::longest_path() const {
  const std::size_t n = num_vertices();
  std::vector<std::size_t> indeg(n, 0), depth(n, 0);
  for (const Edge& e : edges_) ++indeg[e.rng];
  std::vector<VertexId> ready;
  for (VertexId v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push_back(v);
  }
  std::size_t best = 0;
  while (!ready.empty()) {
    const VertexId v = ready.back();
    ready.pop_back();
    best = std::max(best, depth[v]);
    for (EdgeId e : out_[v]) {
      const VertexId w = edges_[e].rng;
      depth[w] = std::max(depth[w], depth[v] + 1);
      if (--indeg[w] == 0) ready.push_back(w);
    }
  }
  return best;
}

nlohmann::json DirectedGraph::to_json() const {
  nlohmann::json j;
  j["vertices"] = vertices_;
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : edges_) {
    j["edges"].push_back(
        {{"id", e.name}, {"src", vertices_[e.src]}, {"rng", vertices_[e.rng]}});
  }
  return j;
}

namespace {

const nlohmann::json& require_member(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError("malformed graph: missing \"" + std::string(key) + "\" at " + where);
  }
  return obj.at(key);
}

std::string require_string(const nlohmann::json& j, const std::string& where) {
  if (!j.is_string()) throw InputError("malformed graph: expected string at " + where);
  return j.get<std::string>();
}

}  // namespace

DirectedGraph parse_graph(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("malformed graph: JSON syntax error at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw InputError("malformed graph: top level must be an object at /");

  DirectedGraph g;
  const auto& verts = require_member(doc, "vertices", "/");
  if (!verts.is_array()) throw InputError("malformed graph: expected array at /vertices");
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const std::string where = "/vertices/" + std::to_string(i);
    try {
      g.add_vertex(require_string(verts[i], where));
    } catch (const InputError& e) {
      throw InputError(std::string(e.what()) + " at " + where);
    }
  }

  const auto& edges = require_member(doc, "edges", "/");
  if (!edges.is_array()) throw InputError("malformed graph: expected array at /edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "/edges/" + std::to_string(i);
    const auto& e = edges[i];
    if (!e.is_object()) throw InputError("malformed graph: expected object at " + where);
    std::string id = require_string(require_member(e, "id", where), where + "/id");
    std::string src = require_string(require_member(e, "src", where), where + "/src");
    std::string rng = require_string(require_member(e, "rng", where), where + "/rng");
    try {
      g.add_edge(std::move(id), src, rng);
    } catch (const InputError& err) {
      throw InputError(std::string(err.what()) + " at " + where);
    }
  }
  return g;
}

DirectedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open graph file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_graph(buf.str());
}

std::string_view to_string(VertexClass c) {
  switch (c) {
    case VertexClass::Sink: return "sink";
    case VertexClass::Boundary: return "boundary";
    case VertexClass::Interior: return "interior";
  }
  return "?";
}

std::string_view to_string(EdgeClass c) {
  switch (c) {
    case EdgeClass::SinkEdge: return "sink";
    case EdgeClass::BoundaryEdge: return "boundary";
    case EdgeClass::InteriorEdge: return "interior";
  }
  return "?";
}

std::vector<VertexId> Classification::vertices_of(VertexClass c) const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < vertex_class.size(); ++v) {
    if (vertex_class[v] == c) out.push_back(v);
  }
  return out;
}

std::vector<EdgeId> Classification::edges_of(EdgeClass c) const {
  std::vector<EdgeId> out;
  for (EdgeId e = 0; e < edge_class.size(); ++e) {
    if (edge_class[e] == c) out.push_back(e);
  }
  return out;
}

std::size_t Classification::sink_index(VertexId v) const {
  auto it = std::find(sinks.begin(), sinks.end(), v);
  if (it == sinks.end()) throw InputError("vertex is not a sink");
  return static_cast<std::size_t>(it - sinks.begin());
}

Classification classify(const DirectedGraph& graph) {
  Classification c;
  const std::size_t nv = graph.num_vertices();
  c.vertex_class.assign(nv, VertexClass::Interior);

  for (VertexId v = 0; v < nv; ++v) {
    if (graph.out_edges(v).empty()) {
      c.vertex_class[v] = VertexClass::Sink;
      c.sinks.push_back(v);
    }
  }
  for (VertexId v = 0; v < nv; ++v) {
    if (c.vertex_class[v] == VertexClass::Sink) continue;
    const auto& out = graph.out_edges(v);
    const bool all_to_sinks = std::all_of(out.begin(), out.end(), [&](EdgeId e) {
      return graph.out_edges(graph.rng(e)).empty();
    });
    if (all_to_sinks) c.vertex_class[v] = VertexClass::Boundary;
  }

  c.edge_class.resize(graph.num_edges());
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    switch (c.vertex_class[graph.rng(e)]) {
      case VertexClass::Sink: c.edge_class[e] = EdgeClass::SinkEdge; break;
      case VertexClass::Boundary: c.edge_class[e] = EdgeClass::BoundaryEdge; break;
      case VertexClass::Interior:
        c.edge_class[e] = EdgeClass::InteriorEdge;
        c.interior_edges.push_back(e);
        break;
    }
  }

  c.sink_edges.resize(c.sinks.size());
  for (std::size_t m = 0; m < c.sinks.size(); ++m) {
    c.sink_edges[m] = graph.in_edges(c.sinks[m]);
  }

  c.V.resize(c.sinks.size());
  for (VertexId v = 0; v < nv; ++v) {
    if (c.vertex_class[v] != VertexClass::Boundary) continue;
    std::size_t best = c.sinks.size();
    for (EdgeId e : graph.out_edges(v)) {
      best = std::min(best, c.sink_index(graph.rng(e)));
    }
    c.m_of[v] = best + 1;
    c.V[best].push_back(v);
  }

  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    if (c.edge_class[e] == EdgeClass::BoundaryEdge) {
      c.boundary_edges_by_source[graph.src(e)].push_back(e);
    }
  }
  for (VertexId v = 0; v < nv; ++v) {
    if (c.boundary_edges_by_source.count(v) != 0) c.Y.push_back(v);
  }
  return c;
}

nlohmann::json Classification::to_json(const DirectedGraph& g) const {
  nlohmann::json j;
  auto& vc = j["vertex_class"] = nlohmann::json::object();
  for (VertexId v = 0; v < vertex_class.size(); ++v) {
    vc[g.vertex_name(v)] = std::string(to_string(vertex_class[v]));
  }
  auto& ec = j["edge_class"] = nlohmann::json::object();
  for (EdgeId e = 0; e < edge_class.size(); ++e) {
    ec[g.edge_name(e)] = std::string(to_string(edge_class[e]));
  }
  j["sinks"] = nlohmann::json::array();
  for (VertexId w : sinks) j["sinks"].push_back(g.vertex_name(w));
  j["sink_edges"] = nlohmann::json::array();
  for (const auto& row : sink_edges) {
    nlohmann::json r = nlohmann::json::array();
    for (EdgeId f : row) r.push_back(g.edge_name(f));
    j["sink_edges"].push_back(r);
  }
  j["m_of"] = nlohmann::json::object();
  for (const auto& [v, m] : m_of) j["m_of"][g.vertex_name(v)] = m;
  j["V"] = nlohmann::json::array();
  for (const auto& level : V) {
    nlohmann::json r = nlohmann::json::array();
    for (VertexId v : level) r.push_back(g.vertex_name(v));
    j["V"].push_back(r);
  }
  j["Y"] = nlohmann::json::array();
  for (VertexId y : Y) j["Y"].push_back(g.vertex_name(y));
  j["boundary_edges_by_source"] = nlohmann::json::object();
  for (const auto& [y, es] : boundary_edges_by_source) {
    nlohmann::json r = nlohmann::json::array();
    for (EdgeId e : es) r.push_back(g.edge_name(e));
    j["boundary_edges_by_source"][g.vertex_name(y)] = r;
  }
  j["interior_edges"] = nlohmann::json::array();
  for (EdgeId e : interior_edges) j["interior_edges"].push_back(g.edge_name(e));
  return j;
}

nlohmann::json GraphValidation::to_json() const {
  return {{"ok", ok()},
          {"violations", violations},
          {"notes", notes},
          {"acyclic", acyclic},
          {"isolated", isolated}};
}

GraphValidation validate_graph(const DirectedGraph& graph) {
  GraphValidation report;
  std::map<std::string, int> seen;
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    if (seen[graph.vertex_name(v)]++ > 0) {
      report.violations.push_back("duplicate vertex id " + graph.vertex_name(v));
    }
  }
  seen.clear();
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    const Edge& ed = graph.edge(e);
    if (seen[ed.name]++ > 0) report.violations.push_back("duplicate edge id " + ed.name);
    if (ed.src >= graph.num_vertices() || ed.rng >= graph.num_vertices()) {
      report.violations.push_back("edge " + ed.name + " has a dangling endpoint");
    }
  }

  report.acyclic = graph.is_acyclic();
  if (!report.acyclic) {
    report.notes.push_back("graph has cycles: only truncated representations are available");
  }
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    if (graph.in_edges(v).empty() && graph.out_edges(v).empty()) {
      report.isolated.push_back(graph.vertex_name(v));
      report.notes.push_back(graph.vertex_name(v) + " is a sink receiving no edges");
    }
  }
  return report;
}

}  // namespace ckgen
