#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ckgen/generator.hpp"
#include "ckgen/graph.hpp"
#include "ckgen/linalg.hpp"
#include "ckgen/representation.hpp"
#include "ckgen/schedule.hpp"

namespace ckgen {

enum class ExtractionMode { Power, Spectral };
/// How the normalized power iteration advances: one factor of g/gamma per
/// step, or by squaring the current iterate (doubling the exponent).
enum class PowerStep { Linear, Squaring };

/// Order of the induction. InteriorFirst splits g itself into A(E) and its
/// complement before touching the sinks. That split needs a^*a + (b+c)^*(b+c)
/// and d^*d to live on orthogonal subspaces, which fails as soon as an
/// interior vertex emits an edge into a sink (beta^2 P_v then overlaps the
/// support of d^*d). SinksFirst peels the sink terms off g first and splits
/// the leftover d instead. Auto picks SinksFirst exactly in that situation.
enum class ExtractionOrder { Auto, InteriorFirst, SinksFirst };

std::string_view to_string(ExtractionMode m);
ExtractionMode parse_mode(std::string_view s);
std::string_view to_string(ExtractionOrder o);
ExtractionOrder parse_order(std::string_view s);

/// True when some interior vertex emits an edge into a sink.
bool interior_emits_sink_edge(const DirectedGraph& graph, const Classification& cls);

struct ExtractionOptions {
  ExtractionMode mode = ExtractionMode::Power;
  ExtractionOrder order = ExtractionOrder::Auto;
  PowerStep step = PowerStep::Squaring;
  /// PASS threshold on every recovered object.
  double tol = 1e-6;
  /// Relative Frobenius step size at which the power iteration stops.
  double power_tol = 1e-13;
  /// A step that grows again after falling below stall_tol (relative) means
  /// the iteration hit its rounding floor: rounding errors in the input turn
  /// a repeated eigenvalue into a tiny Jordan block, whose normalized powers
  /// drift linearly. The previous iterate is then taken as the limit.
  double stall_tol = 1e-9;
  /// Largest exponent k the power iteration may reach.
  std::size_t k_max = 10000;
  /// Singular values below this count as zero (null spaces, kernels).
  double zero_tol = 1e-9;
  /// Eigenvalues closer than this (square-root scale) to an interval
  /// endpoint are ambiguous.
  double ambiguity_tol = 1e-10;
  /// Largest admissible distance (square-root scale) between an in-interval
  /// eigenvalue and the expected level of its atom.
  double level_tol = 1e-8;
  /// Run the other mode and the k-th root limit alongside each sink stage.
  bool cross_check = true;
  /// Number of repeated square roots used by the k-th root cross-check.
  unsigned root_steps = 6;
  /// Tolerate atoms whose level is absent from the spectrum (window
  /// families, where an atom may live entirely on the deepest layer).
  bool allow_missing_atoms = false;
  /// Treat ||z|| > 1/2 in a sink-edge stage as an error. The bound is proved
  /// for the interior-first order only; sinks-first records it as a diagnostic.
  bool enforce_z_bound = true;
};

/// One atom identified in the spectrum of g^*g.
struct LevelMatch {
  std::size_t atom = 0;
  double eigenvalue = 0.0;
  std::size_t multiplicity = 0;
  Matrix projection;
  /// |sqrt(eigenvalue) - sqrt(expected level)|, worst over the cluster.
  double offset = 0.0;
};

struct SpectralSplit {
  Matrix interior_part;
  Matrix complement_part;
  std::vector<LevelMatch> levels;
  /// Smallest square-root-scale distance of any eigenvalue to an interval endpoint.
  double endpoint_margin = std::numeric_limits<double>::infinity();
};

/// Splits a positive matrix x into its spectral parts inside and outside the
/// interval union, and identifies each in-interval eigenvalue with an atom of
/// the public value table. Throws InvariantError on an eigenvalue too close
/// to an endpoint or an in-interval eigenvalue matching no expected level.
SpectralSplit split_disjoint_spectra(const Matrix& x, const IntervalAssignment& intervals,
                                     const ExtractionOptions& options = {});

/// Same split for x = g^*g, computed from the singular value decomposition of
/// g. Small levels keep far better accuracy this way than from g^*g itself.
SpectralSplit split_generator(const Matrix& g, const IntervalAssignment& intervals,
                              const ExtractionOptions& options = {});

struct InteriorRecovery {
  SpectralSplit split;
  std::vector<Matrix> atoms;  // indexed like intervals.atoms
  Matrix xi;
  Matrix xi_root;
  std::map<VertexId, Matrix> h;
  std::map<VertexId, Matrix> P;  // interior vertices
  std::map<EdgeId, Matrix> S;    // interior edges
};

InteriorRecovery recover_interior(const Matrix& g, const DirectedGraph& graph,
                                  const Classification& cls, const CoefficientSchedule& schedule,
                                  const IntervalAssignment& intervals,
                                  const ExtractionOptions& options = {});

struct PowerResult {
  Matrix limit;
  /// Matrix products performed.
  std::size_t iterations = 0;
  /// Exponent reached.
  std::size_t power = 0;
  double observed_ratio = 0.0;
  /// Stopped at the rounding floor rather than at power_tol.
  bool stalled = false;
};

/// Normalized power iteration x -> x (g/lambda) (or squaring) until the
/// Frobenius step falls below power_tol. Throws ConvergenceError after k_max.
PowerResult power_limit(const Matrix& g, double lambda, const ExtractionOptions& options,
                        double theoretical_ratio = std::numeric_limits<double>::quiet_NaN());

/// Riesz projector of g at the semisimple eigenvalue lambda, assembled from
/// the right and left null spaces of g - lambda.
Matrix riesz_projector(const Matrix& g, double lambda, double zero_tol);

/// (x)^{1/2^steps} with eigenvalues below zero_tol set to 0.
Matrix kth_root(const Matrix& x, unsigned steps, double zero_tol);

struct SinkEdgeRecovery {
  Matrix y;
  Matrix range_projection;  // T T^*
  Matrix T;
  double z_norm = 0.0;
  std::string mode;
  std::size_t iterations = 0;
  std::size_t power = 0;
  double observed_ratio = 0.0;
  double theoretical_ratio = 0.0;
  /// ||T - T_other mode||; NaN when not cross-checked.
  double mode_agreement = std::numeric_limits<double>::quiet_NaN();
  /// ||(yy^*)^{1/k} - TT^*||; NaN when not cross-checked.
  double root_crosscheck = std::numeric_limits<double>::quiet_NaN();
};

/// Recovers t_{M,N} from g_{M,N}. `theoretical_ratio` is only used for
/// diagnostics. Throws InvariantError when ||z|| > 1/2 and the bound is enforced.
SinkEdgeRecovery recover_sink_edge(const Matrix& g_mn, double gamma, double beta,
                                   double theoretical_ratio, const ExtractionOptions& options = {});

struct SinkProjectionRecovery {
  Matrix Q;
  std::string mode;
  std::size_t iterations = 0;
  std::size_t power = 0;
  double observed_ratio = 0.0;
  double theoretical_ratio = 0.0;
  double projection_defect = 0.0;
  double mode_agreement = std::numeric_limits<double>::quiet_NaN();
};

/// Recovers q_M from x = g_{M+1,1} + delta_M q_M.
SinkProjectionRecovery recover_sink_projection(const Matrix& x, double delta, double theoretical_ratio,
                                               const ExtractionOptions& options = {});

struct BoundaryRecovery {
  std::map<VertexId, Matrix> P;  // boundary vertices
  std::map<EdgeId, Matrix> S;    // boundary edges
  Matrix a1;
  Matrix a;
};

/// Boundary stage. `sink_edges` holds the recovered T_f for every sink edge.
BoundaryRecovery recover_boundary(const Matrix& g11, const std::map<EdgeId, Matrix>& sink_edges,
                                  const InteriorRecovery& interior, const DirectedGraph& graph,
                                  const Classification& cls, const CoefficientSchedule& schedule);

struct StageRecord {
  std::string stage;
  std::string object;
  std::string mode;
  std::size_t iterations = 0;
  std::size_t power = 0;
  double observed_ratio = std::numeric_limits<double>::quiet_NaN();
  double theoretical_ratio = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  double z_norm = std::numeric_limits<double>::quiet_NaN();
  double mode_agreement = std::numeric_limits<double>::quiet_NaN();
  double root_crosscheck = std::numeric_limits<double>::quiet_NaN();
  /// Power-iteration limit y of a sink-edge stage (kept in memory only).
  Matrix y;

  nlohmann::json to_json() const;
};

struct RecoveryReport {
  std::string mode;
  std::string order;
  double tol = 0.0;
  /// Keyed by edge id / sink id; present only when ground truth was supplied.
  std::map<std::string, double> edge_residuals;
  std::map<std::string, double> sink_residuals;
  /// Boundary and interior vertex projections, informational.
  std::map<std::string, double> vertex_residuals;
  std::vector<StageRecord> stages;
  std::vector<std::string> notes;
  bool compared = false;

  double max_residual() const;
  bool passed() const;
  nlohmann::json to_json() const;
};

struct ExtractionResult {
  /// Everything recovered from g, laid out like the ground-truth family.
  MatrixCKFamily recovered;
  RecoveryReport report;
  Matrix g11;
};

/// Runs the whole induction from g and the public metadata. Ground truth, if
/// given, is read only for the final residuals.
ExtractionResult run_full_extraction(const Matrix& g, const DirectedGraph& graph,
                                     const Classification& cls, const CoefficientSchedule& schedule,
                                     const IntervalAssignment& intervals,
                                     const MatrixCKFamily* ground_truth,
                                     const ExtractionOptions& options = {});

struct NoSinksResult {
  MatrixCKFamily family;
  GeneratorParts parts;
  std::map<EdgeId, Matrix> recovered;
  /// ||W (S_rec - S) W|| with W the projection onto lengths 0..L-1.
  std::map<std::string, double> window_residuals;
  std::size_t depth = 0;
  std::string note;
  double tol = 0.0;

  double max_residual() const;
  bool passed() const;
  nlohmann::json to_json() const;
};

/// Sink-free graphs: g = d with S = E^1 on the depth-L window family, and
/// every S_e recovered as (1/eps_e) S_eS_e^* d h. Throws InputError when the
/// graph has sinks.
NoSinksResult no_sinks_fast_path(const DirectedGraph& graph, const CoefficientSchedule& schedule,
                                 std::size_t depth, const ExtractionOptions& options = {});

}  // namespace ckgen
