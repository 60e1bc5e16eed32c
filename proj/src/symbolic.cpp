#include "ckgen/symbolic.hpp"

#include <optional>

#include "ckgen/error.hpp"

namespace ckgen {

Path Path::concat(const Path& tail) const {
  if (tail.edges.empty()) return *this;
  if (edges.empty()) return tail;
  Path out{tail.source, edges};
  out.edges.insert(out.edges.end(), tail.edges.begin(), tail.edges.end());
  return out;
}

std::string Path::label(const DirectedGraph& g) const {
  if (edges.empty()) return g.vertex_name(source);
  std::string out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i) out += "·";
    out += g.edge_name(edges[i]);
  }
  return out;
}

bool composable(const DirectedGraph& g, const Path& p) {
  if (p.edges.empty()) return p.source < g.num_vertices();
  for (std::size_t i = 0; i + 1 < p.edges.size(); ++i) {
    if (g.src(p.edges[i]) != g.rng(p.edges[i + 1])) return false;
  }
  return g.src(p.edges.back()) == p.source;
}

namespace {

/// If `prefix` is an initial (range side) segment of `full`, returns the
/// remainder r with full = prefix . r.
std::optional<Path> strip_prefix(const DirectedGraph& g, const Path& full, const Path& prefix) {
  if (prefix.edges.empty()) {
    if (full.range(g) != prefix.source) return std::nullopt;
    return full;
  }
  if (prefix.edges.size() > full.edges.size()) return std::nullopt;
  for (std::size_t i = 0; i < prefix.edges.size(); ++i) {
    if (prefix.edges[i] != full.edges[i]) return std::nullopt;
  }
  Path rest{full.source, {full.edges.begin() + static_cast<std::ptrdiff_t>(prefix.edges.size()),
                          full.edges.end()}};
  return rest;
}

std::string word(const DirectedGraph& g, const Monomial& m) {
  if (m.mu.empty() && m.nu.empty()) return "p_" + g.vertex_name(m.mu.source);
  std::string out;
  for (EdgeId e : m.mu.edges) {
    if (!out.empty()) out += " ";
    out += "s_" + g.edge_name(e);
  }
  for (auto it = m.nu.edges.rbegin(); it != m.nu.edges.rend(); ++it) {
    if (!out.empty()) out += " ";
    out += "s_" + g.edge_name(*it) + "*";
  }
  return out;
}

}  // namespace

SymbolicElement SymbolicElement::p(std::shared_ptr<const DirectedGraph> g, VertexId v) {
  return monomial(std::move(g), {Path::trivial(v), Path::trivial(v)});
}

SymbolicElement SymbolicElement::s(std::shared_ptr<const DirectedGraph> g, EdgeId e) {
  const VertexId src = g->src(e);
  return monomial(g, {Path{src, {e}}, Path::trivial(src)});
}

SymbolicElement SymbolicElement::monomial(std::shared_ptr<const DirectedGraph> g, Monomial m,
                                          QComplex c) {
  if (m.mu.source != m.nu.source) {
    throw InputError("monomial s_mu s_nu^* requires s(mu) = s(nu)");
  }
  SymbolicElement x(std::move(g));
  x.add_term(m, c);
  return x;
}

void SymbolicElement::add_term(const Monomial& m, const QComplex& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

void SymbolicElement::check_compatible(const SymbolicElement& o) const {
  if (graph_ && o.graph_ && graph_ != o.graph_) {
    throw InputError("symbolic operands belong to different graphs");
  }
}

SymbolicElement& SymbolicElement::operator+=(const SymbolicElement& o) {
  check_compatible(o);
  if (!graph_) graph_ = o.graph_;
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

SymbolicElement& SymbolicElement::operator-=(const SymbolicElement& o) {
  check_compatible(o);
  if (!graph_) graph_ = o.graph_;
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

SymbolicElement operator*(const QComplex& c, const SymbolicElement& x) {
  SymbolicElement out(x.graph_);
  for (const auto& [m, d] : x.terms_) out.add_term(m, c * d);
  return out;
}

SymbolicElement operator*(const SymbolicElement& x, const SymbolicElement& y) {
  return multiply(x, y);
}

SymbolicElement multiply(const SymbolicElement& x, const SymbolicElement& y) {
  x.check_compatible(y);
  auto graph = x.graph() ? x.graph() : y.graph();
  SymbolicElement out(graph);
  if (!graph) return out;
  const DirectedGraph& g = *graph;
  for (const auto& [m1, c1] : x.terms()) {
    for (const auto& [m2, c2] : y.terms()) {
      // (s_mu s_nu^*)(s_alpha s_beta^*)
      if (auto rest = strip_prefix(g, m2.mu, m1.nu)) {
        out.add_term({m1.mu.concat(*rest), m2.nu}, c1 * c2);
      } else if (auto rest2 = strip_prefix(g, m1.nu, m2.mu)) {
        out.add_term({m1.mu, m2.nu.concat(*rest2)}, c1 * c2);
      }
    }
  }
  return out;
}

SymbolicElement adjoint(const SymbolicElement& x) {
  SymbolicElement out(x.graph());
  for (const auto& [m, c] : x.terms()) out.add_term({m.nu, m.mu}, c.conj());
  return out;
}

double SymbolicElement::l1_norm() const {
  double total = 0.0;
  for (const auto& [m, c] : terms_) total += std::abs(c.to_complex());
  return total;
}

std::string SymbolicElement::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const auto& [m, c] : terms_) {
    if (!out.empty()) out += " + ";
    if (c == QComplex(Rational(1))) {
      // bare word
    } else if (c == QComplex(Rational(-1))) {
      out += "-";
    } else {
      out += "(" + ckgen::to_string(c) + ")·";
    }
    out += word(*graph_, m);
  }
  return out;
}

SymbolicElement expand_ck3(const SymbolicElement& x, std::size_t depth_bound) {
  if (!x.graph()) return x;
  const DirectedGraph& g = *x.graph();
  if (depth_bound == 0) depth_bound = g.num_vertices();
  SymbolicElement cur = x;
  for (std::size_t round = 0;; ++round) {
    SymbolicElement next(x.graph());
    bool changed = false;
    for (const auto& [m, c] : cur.terms()) {
      const auto& receivers = g.in_edges(m.mu.source);
      if (receivers.empty()) {
        next.add_term(m, c);
        continue;
      }
      changed = true;
      for (EdgeId e : receivers) {
        const Path step = Path::of_edge(g, e);
        next.add_term({m.mu.concat(step), m.nu.concat(step)}, c);
      }
    }
    if (!changed) return cur;
    if (round >= depth_bound) {
      throw InvariantError("expand_ck3: depth bound " + std::to_string(depth_bound) +
                           " exceeded (graph has cycles)");
    }
    cur = std::move(next);
  }
}

bool OrthogonalityReport::passed() const { return failures() == 0; }

std::size_t OrthogonalityReport::failures() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += c.ok ? 0 : 1;
  return n;
}

nlohmann::json OrthogonalityReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["checks"] = checks.size();
  j["failures"] = nlohmann::json::array();
  for (const auto& c : checks) {
    if (!c.ok) {
      j["failures"].push_back(
          {{"identity", c.identity}, {"indices", c.indices}, {"residue", c.residue}});
    }
  }
  return j;
}

OrthogonalityReport verify_orthogonality_lemma(std::shared_ptr<const DirectedGraph> graph,
                                               const Classification& cls) {
  const DirectedGraph& g = *graph;
  OrthogonalityReport report;
  auto S = [&](EdgeId e) { return SymbolicElement::s(graph, e); };
  auto P = [&](VertexId v) { return SymbolicElement::p(graph, v); };
  auto expect = [&](const std::string& identity, const std::string& idx,
                    const SymbolicElement& lhs, const SymbolicElement& rhs) {
    const SymbolicElement residue = lhs - rhs;
    report.checks.push_back({identity, idx, residue.is_zero(), residue.to_string()});
  };
  const SymbolicElement zero(graph);
  auto en = [&](EdgeId e) { return g.edge_name(e); };
  auto vn = [&](VertexId v) { return g.vertex_name(v); };

  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    for (EdgeId f = 0; f < g.num_edges(); ++f) {
      if (e != f) expect("s_e* s_e' = 0", en(e) + "," + en(f), adjoint(S(e)) * S(f), zero);
    }
  }

  for (std::size_t m = 0; m < cls.sinks.size(); ++m) {
    const auto q = P(cls.sinks[m]);
    const std::string qm = "q_" + std::to_string(m + 1);
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      if (cls.edge_class[e] == EdgeClass::SinkEdge) continue;
      const auto s = S(e);
      const std::string idx = qm + "," + en(e);
      expect("q_m s_e = 0", idx, q * s, zero);
      expect("s_e q_m = 0", idx, s * q, zero);
      expect("q_m s_e* = 0", idx, q * adjoint(s), zero);
      expect("s_e* q_m = 0", idx, adjoint(s) * q, zero);
    }
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
      if (cls.is_sink(v)) continue;
      expect("q_m p_v = 0", qm + "," + vn(v), q * P(v), zero);
      expect("p_v q_m = 0", qm + "," + vn(v), P(v) * q, zero);
    }
  }

  for (std::size_t m = 0; m < cls.sink_edges.size(); ++m) {
    for (std::size_t n = 0; n < cls.sink_edges[m].size(); ++n) {
      const EdgeId f = cls.sink_edges[m][n];
      const auto t = S(f);
      const std::string tmn = "t_" + std::to_string(m + 1) + "," + std::to_string(n + 1);
      for (VertexId v = 0; v < g.num_vertices(); ++v) {
        if (!cls.is_sink(v)) expect("p_v t_mn = 0", vn(v) + "," + tmn, P(v) * t, zero);
      }
      for (std::size_t m2 = 0; m2 < cls.sink_edges.size(); ++m2) {
        for (std::size_t n2 = 0; n2 < cls.sink_edges[m2].size(); ++n2) {
          expect("t_mn t_m'n' = 0",
                 tmn + ";t_" + std::to_string(m2 + 1) + "," + std::to_string(n2 + 1),
                 t * S(cls.sink_edges[m2][n2]), zero);
        }
        const auto q = P(cls.sinks[m2]);
        expect("q_m' t_mn = [m=m'] t_mn", "q_" + std::to_string(m2 + 1) + "," + tmn, q * t,
               m2 == m ? t : zero);
      }
    }
  }

  for (VertexId y : cls.Y) {
    const auto& edges = cls.boundary_edges_by_source.at(y);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      for (std::size_t n = 0; n < edges.size(); ++n) {
        const auto sk = S(edges[k]);
        const auto sn = S(edges[n]);
        expect("s_yk s_yn* s_yn = s_yk",
               vn(y) + "," + std::to_string(k + 1) + "," + std::to_string(n + 1),
               sk * adjoint(sn) * sn, sk);
      }
    }
  }
  return report;
}

}  // namespace ckgen
