#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ckgen/graph.hpp"
#include "ckgen/linalg.hpp"
#include "ckgen/representation.hpp"
#include "ckgen/schedule.hpp"
#include "ckgen/symbolic.hpp"

namespace ckgen {

enum class AtomKind { RangeProjection, Residual };

/// Minimal projection of the commutative algebra generated by the owner
/// vertex projections and the range projections of the edges entering them.
struct Atom {
  Matrix projection;
  VertexId owner = 0;
  AtomKind kind = AtomKind::Residual;
  std::optional<EdgeId> edge;  // set for RangeProjection
};

struct AtomDecomposition {
  std::vector<Atom> atoms;
  /// owner vertex -> indices into atoms (K_v).
  std::map<VertexId, std::vector<std::size_t>> by_owner;
};

/// Atoms over the given owner vertices: {S_e S_e^* : r(e) = v} plus the
/// residual P_v - sum S_e S_e^* when its norm exceeds `threshold`.
AtomDecomposition compute_atoms_for(const MatrixCKFamily& family, const DirectedGraph& graph,
                                    const std::vector<VertexId>& owners, double threshold = 1e-9);

/// Atoms of A(E): owners are the interior vertices.
AtomDecomposition compute_atoms(const MatrixCKFamily& family, const DirectedGraph& graph,
                                const Classification& cls, double threshold = 1e-9);

struct VertexInterval {
  VertexId vertex = 0;
  double theta = 0.0;
  double theta_prime = 0.0;
  double mu = 0.0;
  /// Width of the gap the interval was carved from.
  double gap_width = 0.0;

  bool contains(double x) const { return x >= theta && x <= theta_prime; }
};

/// Public label of an atom: who owns it, what it is, and xi's value on it.
struct AtomLabel {
  VertexId owner = 0;
  AtomKind kind = AtomKind::Residual;
  std::optional<EdgeId> edge;
  double value = 0.0;
};

/// Interval table plus xi's value table. This is the construction metadata
/// extraction is allowed to read.
struct IntervalAssignment {
  std::vector<VertexInterval> intervals;
  std::vector<AtomLabel> atoms;
  double min_width = 0.0;

  const VertexInterval& interval_of(VertexId v) const;
  /// Index of the interval containing x, if any.
  std::optional<std::size_t> interval_containing(double x) const;
  /// Eigenvalue of d^*d on atom i: mu_owner * value.
  double level(std::size_t atom) const;
  /// Smallest distance between an interval endpoint and the levels inside it.
  double level_separation() const;

  nlohmann::json to_json(const DirectedGraph& g) const;
  static IntervalAssignment from_json(const nlohmann::json& j, const DirectedGraph& g);
};

/// Greedy placement: for each vertex in order, the middle third of the widest
/// gap of {0} u C u placed endpoints inside (0, min(mu_v, 1)).
/// Throws InvariantError when the widest gap is narrower than min_width.
IntervalAssignment choose_intervals(const std::vector<double>& forbidden,
                                    const std::vector<std::pair<VertexId, double>>& mu,
                                    const std::map<VertexId, std::size_t>& atom_count,
                                    double min_width);

/// Fills the value table (k atoms of K_v equally spaced strictly inside
/// [theta_v/mu_v, theta'_v/mu_v]) and returns xi = sum value * atom.
Matrix build_xi(const AtomDecomposition& atoms, IntervalAssignment& intervals);

/// sum_atoms value^{p} * atom restricted to K_v (all atoms when v is nullopt).
Matrix xi_power(const AtomDecomposition& atoms, const IntervalAssignment& intervals, double p,
                std::optional<VertexId> v = std::nullopt);

struct AbcParts {
  Matrix a, b, c;
};

AbcParts assemble_abc(const MatrixCKFamily& family, const DirectedGraph& graph,
                      const Classification& cls, const CoefficientSchedule& schedule);

/// Ascending eigenvalues of a^*a + (b+c)^*(b+c).
std::vector<double> forbidden_set(const AbcParts& abc);
std::vector<double> forbidden_set(const MatrixCKFamily& family, const DirectedGraph& graph,
                                  const Classification& cls, const CoefficientSchedule& schedule);

/// Weights of the edges in S = E^1_int u {e_{y,1}}: epsilon_e resp. alpha_{y,1}.
std::map<EdgeId, double> d_weights(const Classification& cls, const CoefficientSchedule& schedule);

/// mu_v = sum of squared weights of the S-edges leaving v, for each owner.
std::vector<std::pair<VertexId, double>> mu_values(const DirectedGraph& graph,
                                                   const std::map<EdgeId, double>& weights);

struct GeneratorOptions {
  double min_width = 1e-12;
  double atom_threshold = 1e-9;
  /// Eigenvalues of magnitude below zero_tol * max(1, norm) count as 0.
  double zero_tol = 1e-13;
};

struct GeneratorParts {
  Matrix a, b, c, d, xi, g;
  CoefficientSchedule schedule;
  IntervalAssignment intervals;
  AtomDecomposition atoms;
  std::vector<double> forbidden;
  /// h_v with xi^{1/2} h_v = P_v.
  std::map<VertexId, Matrix> h;
  /// Smallest distance from a nonzero eigenvalue of d^*d to C u {0}.
  double spectral_margin = 0.0;

  nlohmann::json to_json(const DirectedGraph& graph, const Classification& cls) const;
};

/// a, b, c from the schedule plus d = (sum_{S} w_e S_e) xi^{1/2}; runs the
/// spectral safety check eig(d^*d)\{0} inside the intervals and off C.
GeneratorParts assemble_abcd(const MatrixCKFamily& family, const DirectedGraph& graph,
                             const Classification& cls, const CoefficientSchedule& schedule,
                             const AtomDecomposition& atoms, const IntervalAssignment& intervals,
                             const Matrix& xi, const GeneratorOptions& options = {});

/// Full construction: atoms, forbidden set, intervals, xi, then a+b+c+d.
GeneratorParts build_generator(const MatrixCKFamily& family, const DirectedGraph& graph,
                               const Classification& cls, const CoefficientSchedule& schedule,
                               const GeneratorOptions& options = {});

struct ModifiedGenerator {
  Matrix g_mn;
  Matrix a_m;
};

/// Ground-truth g_{M,N} and a_M (1-based, lexicographic order on (m,n)).
/// Valid for 1 <= M <= #sinks + 1 and 1 <= N <= max(1, |r^-1(w_M)| + 1).
ModifiedGenerator modified_generator(const GeneratorParts& parts, const MatrixCKFamily& family,
                                     const DirectedGraph& graph, const Classification& cls,
                                     std::size_t M, std::size_t N);

/// a_1 = (sum_y alpha_{y,1} S_{y,1}) xi^{1/2} + a.
Matrix a_one(const GeneratorParts& parts, const MatrixCKFamily& family, const DirectedGraph& graph,
             const Classification& cls);

struct SymbolicAbc {
  SymbolicElement a, b, c;
};

/// Exact symbolic twins of a, b, c.
SymbolicAbc symbolic_abc(std::shared_ptr<const DirectedGraph> graph, const Classification& cls,
                         const CoefficientSchedule& schedule);

std::string_view to_string(AtomKind k);

}  // namespace ckgen
