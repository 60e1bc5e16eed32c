#pragma once

#include <cstdint>
#include <vector>

#include "ckgen/graph.hpp"
#include "ckgen/linalg.hpp"
#include "ckgen/representation.hpp"

namespace ckgen {

/// Orthonormal basis (trace inner product) of the *-algebra generated by a
/// set of matrices. Finite-dimensional *-algebras are automatically closed,
/// so this is the generated C*-algebra.
struct SpanClosure {
  std::vector<Matrix> basis;
  std::size_t rounds = 0;

  std::size_t dim() const { return basis.size(); }
  /// Largest relative distance from an element of xs to this span.
  double distance_of(const std::vector<Matrix>& xs) const;
};

/// Starts from the generators and their adjoints and keeps multiplying new
/// basis elements on the left by the generators until nothing new appears.
/// A candidate is new when its residual after projection exceeds rel_tol
/// times the norm of the generator that produced it. Throws InputError on
/// mismatched shapes.
SpanClosure span_closure(const std::vector<Matrix>& generators, double rel_tol = 1e-9);

struct SingleGeneration {
  bool generated = false;
  std::size_t dim_g = 0;
  std::size_t dim_family = 0;
  /// Relative distances measuring each containment.
  double family_in_g = 0.0;
  double g_in_family = 0.0;
};

/// Does g generate the algebra of the family's P_v and S_e? True iff the
/// two closures have equal dimension and contain each other to containment_tol.
SingleGeneration single_generation_check(const Matrix& g, const MatrixCKFamily& family,
                                         double containment_tol = 1e-7);

/// Deterministic random DAG: vertex i may only point to j > i, so the vertex
/// order is a topological order. Parallel edges are allowed. Edges into sinks
/// are pruned until every sink receives at most max_sink_indegree edges.
DirectedGraph random_acyclic_graph(std::uint64_t seed, std::size_t max_vertices, std::size_t max_edges,
                                   std::size_t max_sink_indegree);

/// Number of paths whose source receives no edges (dimension of the exact
/// path representation). Requires an acyclic graph.
std::size_t path_space_dimension(const DirectedGraph& graph);

/// Draws random_acyclic_graph with derived seeds until the path space has
/// dimension at most max_dim. Deterministic in `seed`.
DirectedGraph random_corpus_graph(std::uint64_t seed, std::size_t max_vertices, std::size_t max_edges,
                                  std::size_t max_sink_indegree, std::size_t max_dim);

}  // namespace ckgen
