#pragma once

#include <compare>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ckgen/graph.hpp"
#include "ckgen/rational.hpp"

namespace ckgen {

/// A path e_k ... e_1 written range side first, so edges[0] = e_k. For the
/// empty path, `source` is the anchoring vertex; otherwise source = s(e_1).
struct Path {
  VertexId source = 0;
  std::vector<EdgeId> edges;

  static Path trivial(VertexId v) { return {v, {}}; }
  static Path of_edge(const DirectedGraph& g, EdgeId e) { return {g.src(e), {e}}; }

  bool empty() const { return edges.empty(); }
  std::size_t length() const { return edges.size(); }
  VertexId range(const DirectedGraph& g) const { return edges.empty() ? source : g.rng(edges.front()); }

  /// this . tail, assuming s(this) = r(tail).
  Path concat(const Path& tail) const;

  std::string label(const DirectedGraph& g) const;

  auto operator<=>(const Path&) const = default;
  bool operator==(const Path&) const = default;
};

/// True iff the edge sequence is composable (s(e_{i+1}) = r(e_i)).
bool composable(const DirectedGraph& g, const Path& p);

/// The monomial s_mu s_nu^*; requires s(mu) = s(nu).
struct Monomial {
  Path mu;
  Path nu;
  auto operator<=>(const Monomial&) const = default;
  bool operator==(const Monomial&) const = default;
};

/// Element of the Toeplitz *-algebra of a graph in normal form
/// sum c_{mu,nu} s_mu s_nu^*. Relation p_v = sum s_e s_e^* is not imposed;
/// see expand_ck3.
class SymbolicElement {
 public:
  SymbolicElement() = default;
  explicit SymbolicElement(std::shared_ptr<const DirectedGraph> graph) : graph_(std::move(graph)) {}

  static SymbolicElement p(std::shared_ptr<const DirectedGraph> g, VertexId v);
  static SymbolicElement s(std::shared_ptr<const DirectedGraph> g, EdgeId e);
  static SymbolicElement monomial(std::shared_ptr<const DirectedGraph> g, Monomial m,
                                  QComplex c = QComplex(Rational(1)));

  const std::map<Monomial, QComplex>& terms() const { return terms_; }
  const std::shared_ptr<const DirectedGraph>& graph() const { return graph_; }
  bool is_zero() const { return terms_.empty(); }

  /// Adds c * s_mu s_nu^*; drops the term when the coefficient cancels.
  void add_term(const Monomial& m, const QComplex& c);

  SymbolicElement& operator+=(const SymbolicElement& o);
  SymbolicElement& operator-=(const SymbolicElement& o);
  friend SymbolicElement operator+(SymbolicElement a, const SymbolicElement& b) { return a += b; }
  friend SymbolicElement operator-(SymbolicElement a, const SymbolicElement& b) { return a -= b; }
  friend SymbolicElement operator*(const QComplex& c, const SymbolicElement& x);
  friend SymbolicElement operator*(const SymbolicElement& x, const SymbolicElement& y);
  friend bool operator==(const SymbolicElement& a, const SymbolicElement& b) {
    return a.terms_ == b.terms_;
  }

  /// Sum of |coefficients| (an upper bound for the C*-norm).
  double l1_norm() const;
  std::string to_string() const;

  /// Throws InputError when the operands belong to different graphs.
  void check_compatible(const SymbolicElement& o) const;

 private:

  std::shared_ptr<const DirectedGraph> graph_;
  std::map<Monomial, QComplex> terms_;
};

SymbolicElement multiply(const SymbolicElement& x, const SymbolicElement& y);
SymbolicElement adjoint(const SymbolicElement& x);

/// Rewrites s_mu s_nu^* with common source v as sum_{r(e)=v} s_{mu e} s_{nu e}^*
/// whenever v receives finitely many and at least one edge, repeated to a
/// fixpoint. Throws InvariantError if more than `depth_bound` rounds are
/// needed (only possible on cyclic graphs); the default bound is |E^0|.
SymbolicElement expand_ck3(const SymbolicElement& x, std::size_t depth_bound = 0);

struct IdentityCheck {
  std::string identity;
  std::string indices;
  bool ok = false;
  std::string residue;
};

struct OrthogonalityReport {
  std::vector<IdentityCheck> checks;
  bool passed() const;
  std::size_t failures() const;
  nlohmann::json to_json() const;
};

/// Exact check of the orthogonality relations among s_e, p_v, q_m, t_{m,n}
/// and s_{y,n} used by the generator construction.
OrthogonalityReport verify_orthogonality_lemma(std::shared_ptr<const DirectedGraph> graph,
                                               const Classification& cls);

}  // namespace ckgen
