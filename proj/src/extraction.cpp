#include "ckgen/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ckgen/error.hpp"

namespace ckgen {

std::string_view to_string(ExtractionMode m) { return m == ExtractionMode::Power ? "power" : "spectral"; }

ExtractionMode parse_mode(std::string_view s) {
  if (s == "power") return ExtractionMode::Power;
  if (s == "spectral") return ExtractionMode::Spectral;
  throw InputError("unknown extraction mode '" + std::string(s) + "' (expected power or spectral)");
}

std::string_view to_string(ExtractionOrder o) {
  switch (o) {
    case ExtractionOrder::Auto: return "auto";
    case ExtractionOrder::InteriorFirst: return "interior-first";
    case ExtractionOrder::SinksFirst: return "sinks-first";
  }
  return "auto";
}

ExtractionOrder parse_order(std::string_view s) {
  if (s == "auto") return ExtractionOrder::Auto;
  if (s == "interior-first") return ExtractionOrder::InteriorFirst;
  if (s == "sinks-first") return ExtractionOrder::SinksFirst;
  throw InputError("unknown extraction order '" + std::string(s) +
                   "' (expected auto, interior-first or sinks-first)");
}

bool interior_emits_sink_edge(const DirectedGraph& graph, const Classification& cls) {
  for (const auto& edges : cls.sink_edges) {
    for (EdgeId f : edges) {
      if (cls.vertex_class.at(graph.src(f)) == VertexClass::Interior) return true;
    }
  }
  return false;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Matrix identity_like(const Matrix& g) { return Matrix::Identity(g.rows(), g.cols()); }

/// Shared classification step: sigma[i] is the square root of the i-th
/// eigenvalue of x, V[:, i] its eigenvector.
SpectralSplit split_core(const Eigen::VectorXd& sigma, const Matrix& V,
                         const IntervalAssignment& table, const ExtractionOptions& opt) {
  const auto n = V.rows();
  SpectralSplit out;
  out.interior_part = Matrix::Zero(n, n);
  out.complement_part = Matrix::Zero(n, n);

  std::vector<double> expected(table.atoms.size());
  for (std::size_t a = 0; a < table.atoms.size(); ++a) expected[a] = std::sqrt(table.level(a));

  std::vector<std::vector<Eigen::Index>> members(table.atoms.size());
  std::vector<double> offsets(table.atoms.size(), 0.0);

  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    const double lambda = s * s;
    for (const auto& iv : table.intervals) {
      const double m = std::min(std::abs(s - std::sqrt(iv.theta)), std::abs(s - std::sqrt(iv.theta_prime)));
      out.endpoint_margin = std::min(out.endpoint_margin, m);
      if (m <= opt.ambiguity_tol) {
        throw InvariantError("margin error: eigenvalue " + fmt(lambda) +
                             " of g*g is within tolerance of an endpoint of the interval [" +
                             fmt(iv.theta) + ", " + fmt(iv.theta_prime) + "]");
      }
    }
    const Matrix rank_one = V.col(i) * V.col(i).adjoint();
    const auto slot = table.interval_containing(lambda);
    if (!slot) {
      out.complement_part += lambda * rank_one;
      continue;
    }
    const auto& iv = table.intervals[*slot];
    std::optional<std::size_t> best;
    for (std::size_t a = 0; a < table.atoms.size(); ++a) {
      if (table.atoms[a].owner != iv.vertex) continue;
      if (!best || std::abs(s - expected[a]) < std::abs(s - expected[*best])) best = a;
    }
    double competitor = std::min(std::abs(s - std::sqrt(iv.theta)), std::abs(s - std::sqrt(iv.theta_prime)));
    for (std::size_t a = 0; a < expected.size(); ++a) {
      if (best && a != *best) competitor = std::min(competitor, std::abs(s - expected[a]));
    }
    const double offset = best ? std::abs(s - expected[*best]) : std::numeric_limits<double>::infinity();
    if (offset > opt.level_tol || offset > 0.25 * competitor) {
      throw InvariantError("margin error: eigenvalue " + fmt(lambda) + " of g*g lies inside the interval [" +
                           fmt(iv.theta) + ", " + fmt(iv.theta_prime) +
                           "] but matches no level of the value table" +
                           (best ? " (nearest level " + fmt(table.level(*best)) + ")" : std::string()));
    }
    members[*best].push_back(i);
    offsets[*best] = std::max(offsets[*best], offset);
    out.interior_part += lambda * rank_one;
  }

  for (std::size_t a = 0; a < members.size(); ++a) {
    LevelMatch lm;
    lm.atom = a;
    lm.eigenvalue = table.level(a);
    lm.multiplicity = members[a].size();
    lm.offset = offsets[a];
    lm.projection = Matrix::Zero(n, n);
    for (Eigen::Index i : members[a]) lm.projection += V.col(i) * V.col(i).adjoint();
    if (members[a].empty() && !opt.allow_missing_atoms) {
      throw InvariantError("atom level " + fmt(table.level(a)) + " is absent from the spectrum of g*g");
    }
    out.levels.push_back(std::move(lm));
  }
  return out;
}

}  // namespace

SpectralSplit split_disjoint_spectra(const Matrix& x, const IntervalAssignment& intervals,
                                     const ExtractionOptions& options) {
  const Spectrum s = spectrum(x);
  const Eigen::VectorXd sigma = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return split_core(sigma, s.eigenvectors, intervals, options);
}

SpectralSplit split_generator(const Matrix& g, const IntervalAssignment& intervals,
                              const ExtractionOptions& options) {
  if (g.rows() != g.cols()) throw InputError("generator is not square");
  if (g.rows() == 0) return {};
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
  return split_core(svd.singularValues(), svd.matrixV(), intervals, options);
}

InteriorRecovery recover_interior(const Matrix& g, const DirectedGraph& graph,
                                  const Classification& cls, const CoefficientSchedule& schedule,
                                  const IntervalAssignment& intervals,
                                  const ExtractionOptions& options) {
  InteriorRecovery out;
  out.split = split_generator(g, intervals, options);
  const Matrix zero = Matrix::Zero(g.rows(), g.cols());
  out.xi = zero;
  out.xi_root = zero;
  for (const LevelMatch& lm : out.split.levels) {
    const AtomLabel& label = intervals.atoms[lm.atom];
    out.atoms.push_back(lm.projection);
    out.xi += label.value * lm.projection;
    out.xi_root += std::sqrt(label.value) * lm.projection;
    auto [hp, hnew] = out.h.try_emplace(label.owner, zero);
    hp->second += (1.0 / std::sqrt(label.value)) * lm.projection;
    auto [pp, pnew] = out.P.try_emplace(label.owner, zero);
    pp->second += lm.projection;
  }
  for (EdgeId e : cls.interior_edges) {
    std::optional<std::size_t> atom;
    for (std::size_t a = 0; a < intervals.atoms.size(); ++a) {
      if (intervals.atoms[a].edge == e) atom = a;
    }
    if (!atom) throw InputError("value table has no atom for interior edge " + graph.edge_name(e));
    const auto h = out.h.find(graph.src(e));
    if (h == out.h.end()) {
      throw InvariantError("no h recovered for vertex " + graph.vertex_name(graph.src(e)));
    }
    const double eps = to_double(schedule.epsilon.at(e));
    out.S[e] = (1.0 / eps) * (out.atoms[*atom] * g * h->second);
  }
  return out;
}

PowerResult power_limit(const Matrix& g, double lambda, const ExtractionOptions& options,
                        double theoretical_ratio) {
  const Matrix A = g / lambda;
  PowerResult r;
  Matrix x = A;
  r.power = 1;
  double prev_step = kNaN;
  std::size_t prev_power = 0;
  r.observed_ratio = kNaN;
  for (;;) {
    const bool square = options.step == PowerStep::Squaring;
    const std::size_t next_power = square ? 2 * r.power : r.power + 1;
    if (next_power > options.k_max) {
      throw ConvergenceError("power iteration at " + fmt(lambda) + " did not settle within k_max = " +
                             std::to_string(options.k_max) + " (observed ratio " + fmt(r.observed_ratio) +
                             ", theoretical " + fmt(theoretical_ratio) + ")");
    }
    Matrix next = square ? Matrix(x * x) : Matrix(x * A);
    ++r.iterations;
    const double step = (next - x).norm();
    const double scale = std::max(1.0, x.norm());
    if (!std::isfinite(step)) {
      throw ConvergenceError("power iteration at " + fmt(lambda) + " diverged");
    }
    if (prev_step <= options.stall_tol * scale && step > prev_step) {
      r.stalled = true;
      break;  // x is the iterate with the smallest step
    }
    if (prev_step > 0 && step > 10 * options.power_tol * scale) {
      const double q = step / prev_step;
      r.observed_ratio = square ? std::pow(q, 1.0 / static_cast<double>(prev_power)) : q;
    }
    prev_step = step;
    prev_power = r.power;
    x = std::move(next);
    r.power = next_power;
    if (step <= options.power_tol * scale) break;
  }
  r.limit = std::move(x);
  return r;
}

Matrix riesz_projector(const Matrix& g, double lambda, double zero_tol) {
  const Matrix m = g - lambda * identity_like(g);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = zero_tol * std::max(1.0, sv.size() ? sv[0] : 0.0);
  Eigen::Index k = 0;
  while (k < sv.size() && sv[sv.size() - 1 - k] <= cutoff) ++k;
  if (k == 0) return Matrix::Zero(g.rows(), g.cols());
  const Matrix K = svd.matrixV().rightCols(k);
  const Matrix L = svd.matrixU().rightCols(k);
  const Matrix pairing = L.adjoint() * K;
  Eigen::FullPivLU<Matrix> lu(pairing);
  if (!lu.isInvertible()) {
    throw InvariantError("eigenvalue " + fmt(lambda) + " is not semisimple; no Riesz projector");
  }
  return K * lu.solve(L.adjoint());
}

Matrix kth_root(const Matrix& x, unsigned steps, double zero_tol) {
  Matrix r = x;
  for (unsigned i = 0; i < steps; ++i) {
    r = functional_calculus(spectrum(r), [&](double l) { return l <= zero_tol ? 0.0 : std::sqrt(l); });
  }
  return r;
}

namespace {

struct SinkEdgeCore {
  Matrix y, tt, T;
  std::size_t iterations = 0, power = 0;
  double observed_ratio = kNaN;
};

SinkEdgeCore sink_edge_core(const Matrix& G, double gamma, double beta, ExtractionMode mode,
                            double theoretical_ratio, const ExtractionOptions& options) {
  SinkEdgeCore c;
  if (mode == ExtractionMode::Power) {
    PowerResult pr = power_limit(G, gamma, options, theoretical_ratio);
    c.y = std::move(pr.limit);
    c.iterations = pr.iterations;
    c.power = pr.power;
    c.observed_ratio = pr.observed_ratio;
  } else {
    c.y = riesz_projector(G, gamma, options.zero_tol);
  }
  // yy^* = t(1 + zz^*)t^* has its nonzero spectrum in [1, 5/4].
  c.tt = spectrum(c.y * c.y.adjoint()).projection_where([](double l) { return l >= 0.5; });
  c.T = (c.tt * G - gamma * c.tt) / beta;
  return c;
}

ExtractionMode other(ExtractionMode m) {
  return m == ExtractionMode::Power ? ExtractionMode::Spectral : ExtractionMode::Power;
}

}  // namespace

SinkEdgeRecovery recover_sink_edge(const Matrix& g_mn, double gamma, double beta,
                                   double theoretical_ratio, const ExtractionOptions& options) {
  SinkEdgeCore c = sink_edge_core(g_mn, gamma, beta, options.mode, theoretical_ratio, options);
  SinkEdgeRecovery r;
  r.mode = std::string(to_string(options.mode));
  r.iterations = c.iterations;
  r.power = c.power;
  r.observed_ratio = c.observed_ratio;
  r.theoretical_ratio = theoretical_ratio;
  r.z_norm = op_norm(c.y - c.tt);
  if (options.enforce_z_bound && r.z_norm > 0.5 + 1e-9) {
    throw InvariantError("||z|| = " + fmt(r.z_norm) + " exceeds 1/2; the schedule violates its bounds");
  }
  if (options.cross_check) {
    const SinkEdgeCore o = sink_edge_core(g_mn, gamma, beta, other(options.mode), theoretical_ratio, options);
    r.mode_agreement = op_norm(c.T - o.T);
    r.root_crosscheck = op_norm(kth_root(c.y * c.y.adjoint(), options.root_steps, 1e-12) - c.tt);
  }
  r.y = std::move(c.y);
  r.range_projection = std::move(c.tt);
  r.T = std::move(c.T);
  return r;
}

SinkProjectionRecovery recover_sink_projection(const Matrix& x, double delta, double theoretical_ratio,
                                               const ExtractionOptions& options) {
  SinkProjectionRecovery r;
  r.mode = std::string(to_string(options.mode));
  r.theoretical_ratio = theoretical_ratio;
  auto run = [&](ExtractionMode mode) -> Matrix {
    if (mode == ExtractionMode::Spectral) return riesz_projector(x, delta, options.zero_tol);
    PowerResult pr = power_limit(x, delta, options, theoretical_ratio);
    if (mode == options.mode) {
      r.iterations = pr.iterations;
      r.power = pr.power;
      r.observed_ratio = pr.observed_ratio;
    }
    return std::move(pr.limit);
  };
  r.Q = run(options.mode);
  r.projection_defect = std::max(op_norm(r.Q * r.Q - r.Q), op_norm(r.Q - r.Q.adjoint()));
  if (r.projection_defect > 1e-8) {
    throw InvariantError("recovered sink projection is not a projection (defect " +
                         fmt(r.projection_defect) + ")");
  }
  if (options.cross_check) r.mode_agreement = op_norm(r.Q - run(other(options.mode)));
  return r;
}

BoundaryRecovery recover_boundary(const Matrix& g11, const std::map<EdgeId, Matrix>& sink_edges,
                                  const InteriorRecovery& interior, const DirectedGraph& graph,
                                  const Classification& cls, const CoefficientSchedule& schedule) {
  BoundaryRecovery out;
  out.a1 = Matrix::Zero(g11.rows(), g11.cols());
  for (VertexId v : cls.vertices_of(VertexClass::Boundary)) {
    const EdgeId f = graph.out_edges(v).front();  // every edge a boundary vertex emits is a sink edge
    const auto t = sink_edges.find(f);
    if (t == sink_edges.end()) {
      throw InvariantError("boundary stage needs t_" + graph.edge_name(f) + ", which was not recovered");
    }
    out.P[v] = t->second.adjoint() * t->second;
    out.a1 += out.P[v] * g11;
  }
  Matrix first = Matrix::Zero(g11.rows(), g11.cols());
  for (VertexId y : cls.Y) {
    const EdgeId e = cls.boundary_edges_by_source.at(y).front();
    const double alpha = to_double(schedule.alpha.at(e));
    const auto h = interior.h.find(y);
    if (h == interior.h.end()) {
      throw InvariantError("boundary stage needs h_" + graph.vertex_name(y) + ", which was not recovered");
    }
    out.S[e] = out.a1 * h->second / alpha;
    first += alpha * out.S[e];
  }
  out.a = out.a1 - first * interior.xi_root;
  for (VertexId y : cls.Y) {
    const auto& edges = cls.boundary_edges_by_source.at(y);
    for (std::size_t n = 1; n < edges.size(); ++n) {
      out.S[edges[n]] = out.a * out.S.at(edges[n - 1]) / to_double(schedule.alpha.at(edges[n]));
    }
  }
  return out;
}

namespace {

void put(nlohmann::json& j, const char* key, double v) {
  if (std::isfinite(v)) j[key] = v;
}

}  // namespace

nlohmann::json StageRecord::to_json() const {
  nlohmann::json j = {{"stage", stage}, {"object", object}};
  if (!mode.empty()) j["mode"] = mode;
  if (iterations) j["iterations"] = iterations;
  if (power) j["power"] = power;
  put(j, "observed_ratio", observed_ratio);
  put(j, "theoretical_ratio", theoretical_ratio);
  put(j, "margin", margin);
  put(j, "z_norm", z_norm);
  put(j, "mode_agreement", mode_agreement);
  put(j, "root_crosscheck", root_crosscheck);
  return j;
}

double RecoveryReport::max_residual() const {
  double m = 0.0;
  for (const auto* table : {&edge_residuals, &sink_residuals}) {
    for (const auto& [k, v] : *table) m = std::max(m, v);
  }
  return m;
}

bool RecoveryReport::passed() const { return !compared || max_residual() <= tol; }

nlohmann::json RecoveryReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "ckgen-report/1";
  j["mode"] = mode;
  if (!order.empty()) j["order"] = order;
  j["tol"] = tol;
  j["compared"] = compared;
  j["passed"] = passed();
  if (compared) {
    j["max_residual"] = max_residual();
    j["residuals"] = {{"edges", edge_residuals}, {"sinks", sink_residuals}, {"vertices", vertex_residuals}};
  }
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages) j["stages"].push_back(s.to_json());
  j["notes"] = notes;
  return j;
}

namespace {

struct SinkInduction {
  std::map<EdgeId, Matrix> T;
  std::map<VertexId, Matrix> Q;
  /// What is left of the input after every recovered sink term is removed.
  Matrix remainder;
};

/// Lexicographic induction over the sinks. With `g11` set (interior-first)
/// the boundary parts P_v g11 are removed once the edges into w_m are known,
/// as in the original argument; sinks-first leaves them in, since they are
/// nilpotent and do not touch the eigenvalues the iteration looks for.
SinkInduction run_sink_induction(Matrix G, const Matrix* g11, const DirectedGraph& graph,
                                 const Classification& cls, const CoefficientSchedule& schedule,
                                 const ExtractionOptions& options, RecoveryReport& report) {
  SinkInduction out;
  const std::size_t sinks = cls.sinks.size();
  for (std::size_t m = 1; m <= sinks; ++m) {
    const auto& fs = cls.sink_edges[m - 1];
    const double delta = to_double(schedule.delta_at(m));
    for (std::size_t n = 1; n <= fs.size(); ++n) {
      const double gamma = to_double(schedule.gamma_at(m, n));
      const double beta = to_double(schedule.beta_at(m, n));
      const double next = n < fs.size() ? to_double(schedule.gamma_at(m, n + 1)) : delta;
      SinkEdgeRecovery r = recover_sink_edge(G, gamma, beta, next / gamma, options);
      StageRecord s;
      s.stage = "sink_edge";
      s.object = graph.edge_name(fs[n - 1]);
      s.mode = r.mode;
      s.iterations = r.iterations;
      s.power = r.power;
      s.observed_ratio = r.observed_ratio;
      s.theoretical_ratio = r.theoretical_ratio;
      s.z_norm = r.z_norm;
      s.mode_agreement = r.mode_agreement;
      s.root_crosscheck = r.root_crosscheck;
      s.y = r.y;
      report.stages.push_back(std::move(s));
      G -= beta * r.T + (gamma - delta) * (r.T * r.T.adjoint());
      out.T[fs[n - 1]] = std::move(r.T);
    }
    if (g11) {
      for (VertexId v : cls.V[m - 1]) {
        // v emits an edge into w_m by definition of V_m; its t was just recovered.
        const auto f = std::find_if(graph.out_edges(v).begin(), graph.out_edges(v).end(),
                                    [&](EdgeId e) { return graph.rng(e) == cls.sinks[m - 1]; });
        const Matrix& t = out.T.at(*f);
        G -= (t.adjoint() * t) * *g11;
      }
    }
    double below = 0.0;
    if (m < sinks) {
      below = cls.sink_edges[m].empty() ? to_double(schedule.delta_at(m + 1))
                                        : to_double(schedule.gamma_at(m + 1, 1));
    }
    SinkProjectionRecovery q = recover_sink_projection(G, delta, below / delta, options);
    StageRecord s;
    s.stage = "sink_projection";
    s.object = graph.vertex_name(cls.sinks[m - 1]);
    s.mode = q.mode;
    s.iterations = q.iterations;
    s.power = q.power;
    s.observed_ratio = q.observed_ratio;
    s.theoretical_ratio = q.theoretical_ratio;
    s.mode_agreement = q.mode_agreement;
    report.stages.push_back(std::move(s));
    G -= delta * q.Q;
    out.Q[cls.sinks[m - 1]] = std::move(q.Q);
  }
  out.remainder = std::move(G);
  return out;
}

void record_interior(const InteriorRecovery& interior, RecoveryReport& report) {
  StageRecord s;
  s.stage = "interior";
  s.object = "A(E)";
  s.margin = interior.split.endpoint_margin;
  report.stages.push_back(std::move(s));
}

}  // namespace

ExtractionResult run_full_extraction(const Matrix& g, const DirectedGraph& graph,
                                     const Classification& cls, const CoefficientSchedule& schedule,
                                     const IntervalAssignment& intervals,
                                     const MatrixCKFamily* ground_truth,
                                     const ExtractionOptions& options) {
  if (g.rows() != g.cols()) throw InputError("generator is not square");
  if (ground_truth && static_cast<Eigen::Index>(ground_truth->dim) != g.rows()) {
    throw InputError("ground-truth family dimension does not match the generator");
  }
  ExtractionResult result;
  RecoveryReport& report = result.report;
  report.mode = std::string(to_string(options.mode));
  report.tol = options.tol;
  const Matrix zero = Matrix::Zero(g.rows(), g.cols());

  ExtractionOrder order = options.order;
  const bool gap = interior_emits_sink_edge(graph, cls);
  if (order == ExtractionOrder::Auto) order = gap ? ExtractionOrder::SinksFirst : ExtractionOrder::InteriorFirst;
  report.order = std::string(to_string(order));
  if (gap && order == ExtractionOrder::SinksFirst) {
    report.notes.push_back(
        "an interior vertex emits a sink edge, so d^*d and (b+c)^*(b+c) overlap; sink terms are "
        "removed from g before the interior split, and ||z|| <= 1/2 is reported but not required");
  }

  auto interior_edge_part = [&](const InteriorRecovery& interior) {
    Matrix dpart = zero;
    for (EdgeId e : cls.interior_edges) dpart += to_double(schedule.epsilon.at(e)) * interior.S.at(e);
    return Matrix(dpart * interior.xi_root);
  };

  std::optional<InteriorRecovery> interior;
  SinkInduction sinks;
  if (order == ExtractionOrder::InteriorFirst) {
    interior = recover_interior(g, graph, cls, schedule, intervals, options);
    record_interior(*interior, report);
    result.g11 = g - interior_edge_part(*interior);
    sinks = run_sink_induction(result.g11, &result.g11, graph, cls, schedule, options, report);
  } else {
    ExtractionOptions opt = options;
    opt.enforce_z_bound = false;
    sinks = run_sink_induction(g, nullptr, graph, cls, schedule, opt, report);
    // remainder = a + d. a lives on the boundary projections while d vanishes
    // there, so cutting them off on the right leaves exactly d.
    Matrix PB = zero;
    for (VertexId v : cls.vertices_of(VertexClass::Boundary)) {
      const EdgeId f = graph.out_edges(v).front();
      const Matrix& t = sinks.T.at(f);
      PB += t.adjoint() * t;
    }
    const Matrix d = sinks.remainder - sinks.remainder * PB;
    interior = recover_interior(d, graph, cls, schedule, intervals, options);
    record_interior(*interior, report);
    result.g11 = g - interior_edge_part(*interior);
  }
  if (!cls.sinks.empty()) {
    report.notes.push_back("remainder after the sink induction has norm " + fmt(op_norm(sinks.remainder)));
  }

  const BoundaryRecovery boundary = recover_boundary(result.g11, sinks.T, *interior, graph, cls, schedule);
  {
    StageRecord s;
    s.stage = "boundary";
    s.object = "a_1";
    report.stages.push_back(std::move(s));
  }

  // Assemble the recovered family.
  MatrixCKFamily& fam = result.recovered;
  fam.dim = static_cast<std::size_t>(g.rows());
  if (ground_truth) {
    fam.basis_labels = ground_truth->basis_labels;
    fam.basis_lengths = ground_truth->basis_lengths;
  } else {
    for (std::size_t i = 0; i < fam.dim; ++i) fam.basis_labels.push_back(std::to_string(i));
  }
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    const Matrix* p = nullptr;
    if (auto it = interior->P.find(v); it != interior->P.end()) p = &it->second;
    if (auto it = boundary.P.find(v); it != boundary.P.end()) p = &it->second;
    if (auto it = sinks.Q.find(v); it != sinks.Q.end()) p = &it->second;
    fam.P[graph.vertex_name(v)] = p ? *p : zero;
  }
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    const Matrix* s = nullptr;
    if (auto it = interior->S.find(e); it != interior->S.end()) s = &it->second;
    if (auto it = boundary.S.find(e); it != boundary.S.end()) s = &it->second;
    if (auto it = sinks.T.find(e); it != sinks.T.end()) s = &it->second;
    if (!s) throw InvariantError("edge " + graph.edge_name(e) + " was not recovered");
    fam.S[graph.edge_name(e)] = *s;
  }

  if (ground_truth) {
    report.compared = true;
    for (EdgeId e = 0; e < graph.num_edges(); ++e) {
      report.edge_residuals[graph.edge_name(e)] = op_norm(fam.s(graph, e) - ground_truth->s(graph, e));
    }
    for (VertexId v = 0; v < graph.num_vertices(); ++v) {
      const double r = op_norm(fam.p(graph, v) - ground_truth->p(graph, v));
      (cls.is_sink(v) ? report.sink_residuals : report.vertex_residuals)[graph.vertex_name(v)] = r;
    }
  }
  return result;
}

double NoSinksResult::max_residual() const {
  double m = 0.0;
  for (const auto& [k, v] : window_residuals) m = std::max(m, v);
  return m;
}

bool NoSinksResult::passed() const { return max_residual() <= tol; }

nlohmann::json NoSinksResult::to_json() const {
  nlohmann::json j;
  j["schema"] = "ckgen-report/1";
  j["mode"] = "no-sinks";
  j["tol"] = tol;
  j["depth"] = depth;
  j["passed"] = passed();
  j["max_residual"] = max_residual();
  j["residuals"] = {{"edges", window_residuals}};
  j["notes"] = nlohmann::json::array({note});
  return j;
}

NoSinksResult no_sinks_fast_path(const DirectedGraph& graph, const CoefficientSchedule& schedule,
                                 std::size_t depth, const ExtractionOptions& options) {
  const Classification cls = classify(graph);
  if (cls.has_sinks()) throw InputError("no-sinks path requested for a graph with sinks");
  if (depth < 1) throw InputError("truncation depth must be at least 1");
  NoSinksResult out;
  out.depth = depth;
  out.tol = options.tol;
  out.note = "truncated representation at depth " + std::to_string(depth) +
             "; residuals measured on path lengths 0.." + std::to_string(depth - 1);
  if (graph.num_vertices() == 0) return out;

  out.family = build_truncated_representation(graph, depth);
  out.parts = build_generator(out.family, graph, cls, schedule);
  ExtractionOptions opt = options;
  opt.allow_missing_atoms = true;
  const InteriorRecovery interior =
      recover_interior(out.parts.g, graph, cls, schedule, out.parts.intervals, opt);
  const Matrix W = out.family.length_window(0, depth - 1);
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    out.recovered[e] = interior.S.at(e);
    out.window_residuals[graph.edge_name(e)] =
        op_norm(W * (interior.S.at(e) - out.family.s(graph, e)) * W);
  }
  return out;
}

}  // namespace ckgen
