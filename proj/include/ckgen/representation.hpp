#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ckgen/graph.hpp"
#include "ckgen/linalg.hpp"
#include "ckgen/symbolic.hpp"

namespace ckgen {

/// Concrete Cuntz-Krieger family {P_v}, {S_e} acting on the span of a set of
/// paths. Matrices are keyed by vertex / edge id.
struct MatrixCKFamily {
  std::size_t dim = 0;
  std::vector<std::string> basis_labels;
  /// Lengths of the basis paths; empty for families loaded from files.
  std::vector<std::size_t> basis_lengths;
  std::map<std::string, Matrix> P;
  std::map<std::string, Matrix> S;
  /// Empty for an exact family, otherwise the truncation depth L.
  std::optional<std::size_t> truncation_depth;

  bool exact() const { return !truncation_depth.has_value(); }
  const Matrix& p(const DirectedGraph& g, VertexId v) const { return P.at(g.vertex_name(v)); }
  const Matrix& s(const DirectedGraph& g, EdgeId e) const { return S.at(g.edge_name(e)); }
  Matrix zero() const;
  /// Projection onto the basis paths whose length lies in [lo, hi].
  Matrix length_window(std::size_t lo, std::size_t hi) const;

  nlohmann::json to_json() const;
  static MatrixCKFamily from_json(const nlohmann::json& j);
  friend bool operator==(const MatrixCKFamily& a, const MatrixCKFamily& b);
};

/// Exact family on the paths whose source receives no edges. Throws
/// InputError for cyclic graphs.
MatrixCKFamily build_path_representation(const DirectedGraph& graph);

/// Window family on paths of length <= depth whose source receives no edges
/// or lies on a cycle; S_e kills paths of length depth.
MatrixCKFamily build_truncated_representation(const DirectedGraph& graph, std::size_t depth);

struct RelationResidual {
  std::string relation;
  /// "full" or a description of the window the residual is measured on.
  std::string subspace;
  double residual = 0.0;
  std::string witness;
};

struct CKVerification {
  std::vector<RelationResidual> residuals;
  std::vector<std::string> zero_projections;
  double tol = 0.0;

  /// Every full-space residual within tol.
  bool passed() const;
  /// Every windowed residual within tol (truncated families only).
  bool window_passed() const;
  double max_residual() const;
  double residual(const std::string& relation, const std::string& subspace = "full") const;
  nlohmann::json to_json() const;
};

CKVerification verify_ck_family(const MatrixCKFamily& family, const DirectedGraph& graph, double tol);

/// Evaluates a symbolic element on the family.
Matrix evaluate(const SymbolicElement& x, const MatrixCKFamily& family);

MatrixCKFamily load_family(const std::string& path);
void save_family(const MatrixCKFamily& family, const std::string& path);

}  // namespace ckgen
