#include "ckgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ckgen/error.hpp"

namespace ckgen {

std::string_view to_string(AtomKind k) {
  return k == AtomKind::RangeProjection ? "range_projection" : "residual";
}

AtomDecomposition compute_atoms_for(const MatrixCKFamily& family, const DirectedGraph& graph,
                                    const std::vector<VertexId>& owners, double threshold) {
  AtomDecomposition out;
  std::vector<bool> owned(graph.num_vertices(), false);
  for (VertexId v : owners) owned[v] = true;
  for (VertexId v : owners) {
    Matrix residual = family.p(graph, v);
    auto& group = out.by_owner[v];
    for (EdgeId e : graph.in_edges(v)) {
      const Matrix& s = family.s(graph, e);
      Matrix range = s * s.adjoint();
      residual -= range;
      group.push_back(out.atoms.size());
      out.atoms.push_back({std::move(range), v, AtomKind::RangeProjection, e});
    }
    if (op_norm(residual) > threshold) {
      const double defect =
          std::max(op_norm(residual * residual - residual), op_norm(residual - residual.adjoint()));
      if (defect > threshold) {
        throw InvariantError("compute_atoms: residual P_" + graph.vertex_name(v) +
                             " - sum S_e S_e^* is not a projection (defect " +
                             std::to_string(defect) + ")");
      }
      group.push_back(out.atoms.size());
      out.atoms.push_back({std::move(residual), v, AtomKind::Residual, std::nullopt});
    }
  }
  return out;
}

AtomDecomposition compute_atoms(const MatrixCKFamily& family, const DirectedGraph& graph,
                                const Classification& cls, double threshold) {
  return compute_atoms_for(family, graph, cls.vertices_of(VertexClass::Interior), threshold);
}

const VertexInterval& IntervalAssignment::interval_of(VertexId v) const {
  for (const auto& iv : intervals) {
    if (iv.vertex == v) return iv;
  }
  throw InputError("no interval assigned to vertex " + std::to_string(v));
}

std::optional<std::size_t> IntervalAssignment::interval_containing(double x) const {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].contains(x)) return i;
  }
  return std::nullopt;
}

double IntervalAssignment::level(std::size_t atom) const {
  const AtomLabel& a = atoms.at(atom);
  return interval_of(a.owner).mu * a.value;
}

double IntervalAssignment::level_separation() const {
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double x = level(i);
    const VertexInterval& iv = interval_of(atoms[i].owner);
    sep = std::min({sep, x - iv.theta, iv.theta_prime - x});
    for (std::size_t k = i + 1; k < atoms.size(); ++k) sep = std::min(sep, std::abs(x - level(k)));
  }
  return sep;
}

nlohmann::json IntervalAssignment::to_json(const DirectedGraph& g) const {
  nlohmann::json j;
  j["min_width"] = min_width;
  j["intervals"] = nlohmann::json::array();
  for (const auto& iv : intervals) {
    j["intervals"].push_back({{"vertex", g.vertex_name(iv.vertex)},
                              {"theta", iv.theta},
                              {"theta_prime", iv.theta_prime},
                              {"mu", iv.mu},
                              {"gap_width", iv.gap_width}});
  }
  j["atoms"] = nlohmann::json::array();
  for (const auto& a : atoms) {
    nlohmann::json aj = {{"owner", g.vertex_name(a.owner)},
                         {"kind", std::string(to_string(a.kind))},
                         {"value", a.value}};
    if (a.edge) aj["edge"] = g.edge_name(*a.edge);
    j["atoms"].push_back(aj);
  }
  return j;
}

IntervalAssignment IntervalAssignment::from_json(const nlohmann::json& j, const DirectedGraph& g) {
  IntervalAssignment ia;
  try {
    ia.min_width = j.at("min_width").get<double>();
    for (const auto& iv : j.at("intervals")) {
      ia.intervals.push_back({g.vertex(iv.at("vertex").get<std::string>()),
                              iv.at("theta").get<double>(), iv.at("theta_prime").get<double>(),
                              iv.at("mu").get<double>(), iv.value("gap_width", 0.0)});
    }
    for (const auto& aj : j.at("atoms")) {
      AtomLabel a;
      a.owner = g.vertex(aj.at("owner").get<std::string>());
      a.kind = aj.at("kind").get<std::string>() == "range_projection" ? AtomKind::RangeProjection
                                                                       : AtomKind::Residual;
      if (aj.contains("edge")) a.edge = g.edge_by_name(aj.at("edge").get<std::string>());
      a.value = aj.at("value").get<double>();
      ia.atoms.push_back(a);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed interval table: ") + e.what());
  }
  return ia;
}

IntervalAssignment choose_intervals(const std::vector<double>& forbidden,
                                    const std::vector<std::pair<VertexId, double>>& mu,
                                    const std::map<VertexId, std::size_t>& atom_count,
                                    double min_width) {
  IntervalAssignment out;
  out.min_width = min_width;
  for (const auto& [v, mv] : mu) {
    if (!(mv > 0.0)) throw InvariantError("choose_intervals: mu_v must be positive");
    auto cnt = atom_count.find(v);
    if (cnt == atom_count.end() || cnt->second == 0) {
      throw InvariantError("choose_intervals: vertex has no atoms");
    }
    const double upper = std::min(mv, 1.0);
    std::vector<double> pts{0.0, upper};
    for (double c : forbidden) {
      if (c > 0.0 && c < upper) pts.push_back(c);
    }
    for (const auto& iv : out.intervals) {
      for (double x : {iv.theta, iv.theta_prime}) {
        if (x > 0.0 && x < upper) pts.push_back(x);
      }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    double best_lo = 0.0, best_w = -1.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double lo = pts[i], w = pts[i + 1] - pts[i];
      const double mid = lo + w / 2;
      const bool occupied = std::any_of(out.intervals.begin(), out.intervals.end(),
                                        [&](const VertexInterval& iv) { return iv.contains(mid); });
      if (!occupied && w > best_w) {
        best_w = w;
        best_lo = lo;
      }
    }
    if (best_w < min_width || best_w <= 0.0) {
      throw InvariantError("choose_intervals: no admissible gap of width >= " +
                           std::to_string(min_width));
    }
    out.intervals.push_back({v, best_lo + best_w / 3, best_lo + 2 * best_w / 3, mv, best_w});
  }
  return out;
}

Matrix build_xi(const AtomDecomposition& atoms, IntervalAssignment& intervals) {
  intervals.atoms.clear();
  intervals.atoms.resize(atoms.atoms.size());
  if (atoms.atoms.empty()) return Matrix();
  Matrix xi = Matrix::Zero(atoms.atoms.front().projection.rows(), atoms.atoms.front().projection.cols());
  for (const auto& [v, group] : atoms.by_owner) {
    const VertexInterval& iv = intervals.interval_of(v);
    const double lo = iv.theta / iv.mu, hi = iv.theta_prime / iv.mu;
    const double k = static_cast<double>(group.size());
    for (std::size_t j = 0; j < group.size(); ++j) {
      const Atom& atom = atoms.atoms[group[j]];
      const double value = lo + (hi - lo) * static_cast<double>(j + 1) / (k + 1);
      intervals.atoms[group[j]] = {atom.owner, atom.kind, atom.edge, value};
      xi += value * atom.projection;
    }
  }
  return xi;
}

Matrix xi_power(const AtomDecomposition& atoms, const IntervalAssignment& intervals, double p,
                std::optional<VertexId> v) {
  if (atoms.atoms.empty()) return Matrix();
  Matrix out = Matrix::Zero(atoms.atoms.front().projection.rows(), atoms.atoms.front().projection.cols());
  for (std::size_t i = 0; i < atoms.atoms.size(); ++i) {
    if (v && atoms.atoms[i].owner != *v) continue;
    out += std::pow(intervals.atoms.at(i).value, p) * atoms.atoms[i].projection;
  }
  return out;
}

AbcParts assemble_abc(const MatrixCKFamily& family, const DirectedGraph& graph,
                      const Classification& cls, const CoefficientSchedule& schedule) {
  AbcParts out{family.zero(), family.zero(), family.zero()};
  for (VertexId y : cls.Y) {
    const auto& edges = cls.boundary_edges_by_source.at(y);
    for (std::size_t n = 1; n < edges.size(); ++n) {
      const double alpha = to_double(schedule.alpha.at(edges[n]));
      out.a += alpha * (family.s(graph, edges[n]) * family.s(graph, edges[n - 1]).adjoint());
    }
  }
  for (std::size_t m = 1; m <= cls.sinks.size(); ++m) {
    const double delta = to_double(schedule.delta_at(m));
    out.c += delta * family.p(graph, cls.sinks[m - 1]);
    for (std::size_t n = 1; n <= cls.sink_edges[m - 1].size(); ++n) {
      const Matrix& t = family.s(graph, cls.sink_edges[m - 1][n - 1]);
      out.b += to_double(schedule.beta_at(m, n)) * t;
      out.c += to_double(schedule.gamma_at(m, n) - schedule.delta_at(m)) * (t * t.adjoint());
    }
  }
  return out;
}

std::vector<double> forbidden_set(const AbcParts& abc) {
  const Matrix bc = abc.b + abc.c;
  const Matrix x = abc.a.adjoint() * abc.a + bc.adjoint() * bc;
  const Spectrum s = spectrum(x);
  return {s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size()};
}

std::vector<double> forbidden_set(const MatrixCKFamily& family, const DirectedGraph& graph,
                                  const Classification& cls, const CoefficientSchedule& schedule) {
  return forbidden_set(assemble_abc(family, graph, cls, schedule));
}

std::map<EdgeId, double> d_weights(const Classification& cls, const CoefficientSchedule& schedule) {
  std::map<EdgeId, double> w;
  for (VertexId y : cls.Y) {
    const EdgeId first = cls.boundary_edges_by_source.at(y).front();
    w[first] = to_double(schedule.alpha.at(first));
  }
  for (EdgeId e : cls.interior_edges) w[e] = to_double(schedule.epsilon.at(e));
  return w;
}

std::vector<std::pair<VertexId, double>> mu_values(const DirectedGraph& graph,
                                                   const std::map<EdgeId, double>& weights) {
  std::map<VertexId, double> mu;
  for (const auto& [e, w] : weights) mu[graph.src(e)] += w * w;
  return {mu.begin(), mu.end()};
}

namespace {

Matrix weighted_edge_sum(const MatrixCKFamily& family, const DirectedGraph& graph,
                         const std::map<EdgeId, double>& weights) {
  Matrix out = family.zero();
  for (const auto& [e, w] : weights) out += w * family.s(graph, e);
  return out;
}

}  // namespace

GeneratorParts assemble_abcd(const MatrixCKFamily& family, const DirectedGraph& graph,
                             const Classification& cls, const CoefficientSchedule& schedule,
                             const AtomDecomposition& atoms, const IntervalAssignment& intervals,
                             const Matrix& xi, const GeneratorOptions& options) {
  GeneratorParts parts;
  AbcParts abc = assemble_abc(family, graph, cls, schedule);
  parts.a = std::move(abc.a);
  parts.b = std::move(abc.b);
  parts.c = std::move(abc.c);
  parts.forbidden = forbidden_set({parts.a, parts.b, parts.c});
  parts.schedule = schedule;
  parts.intervals = intervals;
  parts.atoms = atoms;
  parts.xi = xi.size() == 0 ? family.zero() : xi;

  const auto weights = d_weights(cls, schedule);
  const Matrix root = atoms.atoms.empty() ? family.zero() : xi_power(atoms, intervals, 0.5);
  parts.d = weighted_edge_sum(family, graph, weights) * root;
  parts.g = parts.a + parts.b + parts.c + parts.d;
  for (const auto& [v, group] : atoms.by_owner) parts.h[v] = xi_power(atoms, intervals, -0.5, v);

  // Spectral safety: nonzero eigenvalues of d^*d sit inside the intervals and
  // avoid the forbidden set.
  const Spectrum dd = spectrum(parts.d.adjoint() * parts.d);
  const double zero = options.zero_tol;
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < dd.eigenvalues.size(); ++i) {
    const double lambda = dd.eigenvalues[i];
    if (std::abs(lambda) <= zero) continue;
    if (!intervals.interval_containing(lambda)) {
      throw InvariantError("spectral safety check failed: eigenvalue " + std::to_string(lambda) +
                           " of d*d lies outside every interval");
    }
    margin = std::min(margin, lambda);
    for (double c : parts.forbidden) {
      if (std::abs(c) <= zero) continue;
      margin = std::min(margin, std::abs(lambda - c));
    }
  }
  if (margin <= 0.0) {
    throw InvariantError("spectral safety check failed: d*d meets the forbidden set");
  }
  parts.spectral_margin = margin;
  return parts;
}

GeneratorParts build_generator(const MatrixCKFamily& family, const DirectedGraph& graph,
                               const Classification& cls, const CoefficientSchedule& schedule,
                               const GeneratorOptions& options) {
  AtomDecomposition atoms = compute_atoms(family, graph, cls, options.atom_threshold);
  const std::vector<double> forbidden = forbidden_set(family, graph, cls, schedule);
  const auto weights = d_weights(cls, schedule);
  std::map<VertexId, std::size_t> counts;
  for (const auto& [v, group] : atoms.by_owner) counts[v] = group.size();
  std::vector<double> clean;
  for (double c : forbidden) clean.push_back(std::abs(c) <= options.zero_tol ? 0.0 : c);
  IntervalAssignment intervals =
      choose_intervals(clean, mu_values(graph, weights), counts, options.min_width);
  const Matrix xi = build_xi(atoms, intervals);
  return assemble_abcd(family, graph, cls, schedule, atoms, intervals, xi, options);
}

Matrix a_one(const GeneratorParts& parts, const MatrixCKFamily& family, const DirectedGraph& graph,
             const Classification& cls) {
  Matrix first = family.zero();
  for (VertexId y : cls.Y) {
    const EdgeId e = cls.boundary_edges_by_source.at(y).front();
    first += to_double(parts.schedule.alpha.at(e)) * family.s(graph, e);
  }
  const Matrix root = parts.atoms.atoms.empty() ? family.zero()
                                                : xi_power(parts.atoms, parts.intervals, 0.5);
  return first * root + parts.a;
}

ModifiedGenerator modified_generator(const GeneratorParts& parts, const MatrixCKFamily& family,
                                     const DirectedGraph& graph, const Classification& cls,
                                     std::size_t M, std::size_t N) {
  const std::size_t sinks = cls.sinks.size();
  if (M < 1 || M > sinks + 1) throw InputError("modified_generator: M out of range");
  const std::size_t nmax = M <= sinks ? std::max<std::size_t>(1, cls.sink_edges[M - 1].size() + 1) : 1;
  if (N < 1 || N > nmax) throw InputError("modified_generator: N out of range");

  const Matrix a1 = a_one(parts, family, graph, cls);
  ModifiedGenerator out{family.zero(), family.zero()};
  for (std::size_t l = M; l <= sinks; ++l) {
    for (VertexId v : cls.V[l - 1]) out.a_m += family.p(graph, v) * a1;
  }
  out.g_mn = out.a_m;
  const auto& s = parts.schedule;
  for (std::size_t m = M; m <= sinks; ++m) {
    out.g_mn += to_double(s.delta_at(m)) * family.p(graph, cls.sinks[m - 1]);
    for (std::size_t n = 1; n <= cls.sink_edges[m - 1].size(); ++n) {
      if (m == M && n < N) continue;
      const Matrix& t = family.s(graph, cls.sink_edges[m - 1][n - 1]);
      out.g_mn += to_double(s.beta_at(m, n)) * t;
      out.g_mn += to_double(s.gamma_at(m, n) - s.delta_at(m)) * (t * t.adjoint());
    }
  }
  return out;
}

nlohmann::json GeneratorParts::to_json(const DirectedGraph& graph, const Classification& cls) const {
  nlohmann::json j;
  j["schema"] = "ckgen-parts/1";
  j["schedule"] = schedule.to_json(graph, cls);
  j["intervals"] = intervals.to_json(graph);
  j["forbidden"] = forbidden;
  j["spectral_margin"] = spectral_margin;
  j["matrices"] = {{"a", matrix_to_json(a)}, {"b", matrix_to_json(b)},   {"c", matrix_to_json(c)},
                   {"d", matrix_to_json(d)}, {"xi", matrix_to_json(xi)}, {"g", matrix_to_json(g)}};
  return j;
}

SymbolicAbc symbolic_abc(std::shared_ptr<const DirectedGraph> graph, const Classification& cls,
                         const CoefficientSchedule& schedule) {
  SymbolicAbc out{SymbolicElement(graph), SymbolicElement(graph), SymbolicElement(graph)};
  auto S = [&](EdgeId e) { return SymbolicElement::s(graph, e); };
  for (VertexId y : cls.Y) {
    const auto& edges = cls.boundary_edges_by_source.at(y);
    for (std::size_t n = 1; n < edges.size(); ++n) {
      out.a += QComplex(schedule.alpha.at(edges[n])) * (S(edges[n]) * adjoint(S(edges[n - 1])));
    }
  }
  for (std::size_t m = 1; m <= cls.sinks.size(); ++m) {
    out.c += QComplex(schedule.delta_at(m)) * SymbolicElement::p(graph, cls.sinks[m - 1]);
    for (std::size_t n = 1; n <= cls.sink_edges[m - 1].size(); ++n) {
      const auto t = S(cls.sink_edges[m - 1][n - 1]);
      out.b += QComplex(schedule.beta_at(m, n)) * t;
      out.c += QComplex(schedule.gamma_at(m, n) - schedule.delta_at(m)) * (t * adjoint(t));
    }
  }
  return out;
}

}  // namespace ckgen
