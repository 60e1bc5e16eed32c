#include "ckgen/representation.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "ckgen/error.hpp"

namespace ckgen {

Matrix MatrixCKFamily::zero() const {
  const auto n = static_cast<Eigen::Index>(dim);
  return Matrix::Zero(n, n);
}

Matrix MatrixCKFamily::length_window(std::size_t lo, std::size_t hi) const {
  if (basis_lengths.size() != dim) {
    throw InputError("family carries no path-length information");
  }
  Matrix w = zero();
  for (std::size_t i = 0; i < dim; ++i) {
    if (basis_lengths[i] >= lo && basis_lengths[i] <= hi) {
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
  }
  return w;
}

bool operator==(const MatrixCKFamily& a, const MatrixCKFamily& b) {
  return a.dim == b.dim && a.basis_labels == b.basis_labels && a.P == b.P && a.S == b.S &&
         a.truncation_depth == b.truncation_depth;
}

namespace {

MatrixCKFamily build_on_paths(const DirectedGraph& graph, const std::vector<VertexId>& roots,
                              std::optional<std::size_t> depth) {
  std::vector<Path> basis;
  std::function<void(const Path&)> grow = [&](const Path& p) {
    basis.push_back(p);
    if (depth && p.length() >= *depth) return;
    for (EdgeId e : graph.out_edges(p.range(graph))) {
      Path q{p.source, {e}};
      q.edges.insert(q.edges.end(), p.edges.begin(), p.edges.end());
      grow(q);
    }
  };
  for (VertexId v : roots) grow(Path::trivial(v));

  std::map<Path, std::size_t> index;
  for (std::size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], i);

  MatrixCKFamily fam;
  fam.dim = basis.size();
  fam.truncation_depth = depth;
  for (const Path& p : basis) {
    fam.basis_labels.push_back(p.label(graph));
    fam.basis_lengths.push_back(p.length());
  }
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    Matrix pv = fam.zero();
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (basis[i].range(graph) == v) pv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
    fam.P.emplace(graph.vertex_name(v), std::move(pv));
  }
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    Matrix se = fam.zero();
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const Path& mu = basis[i];
      if (mu.range(graph) != graph.src(e)) continue;
      if (depth && mu.length() >= *depth) continue;
      Path target{mu.source, {e}};
      target.edges.insert(target.edges.end(), mu.edges.begin(), mu.edges.end());
      se(static_cast<Eigen::Index>(index.at(target)), static_cast<Eigen::Index>(i)) = 1.0;
    }
    fam.S.emplace(graph.edge_name(e), std::move(se));
  }
  return fam;
}

}  // namespace

MatrixCKFamily build_path_representation(const DirectedGraph& graph) {
  if (!graph.is_acyclic()) {
    throw InputError("build_path_representation: graph has cycles; use the truncated builder");
  }
  std::vector<VertexId> roots;
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    if (graph.in_edges(v).empty()) roots.push_back(v);
  }
  return build_on_paths(graph, roots, std::nullopt);
}

MatrixCKFamily build_truncated_representation(const DirectedGraph& graph, std::size_t depth) {
  if (depth == 0) throw InputError("truncation depth must be at least 1");
  const auto cyc = graph.on_cycle();
  std::vector<VertexId> roots;
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    if (graph.in_edges(v).empty() || cyc[v]) roots.push_back(v);
  }
  return build_on_paths(graph, roots, depth);
}

bool CKVerification::passed() const {
  return std::all_of(residuals.begin(), residuals.end(), [&](const RelationResidual& r) {
    return r.subspace != "full" || r.residual <= tol;
  });
}

bool CKVerification::window_passed() const {
  return std::all_of(residuals.begin(), residuals.end(), [&](const RelationResidual& r) {
    return r.subspace == "full" || r.residual <= tol;
  });
}

double CKVerification::max_residual() const {
  double m = 0.0;
  for (const auto& r : residuals) {
    if (r.subspace == "full") m = std::max(m, r.residual);
  }
  return m;
}

double CKVerification::residual(const std::string& relation, const std::string& subspace) const {
  for (const auto& r : residuals) {
    if (r.relation == relation && r.subspace == subspace) return r.residual;
  }
  throw InputError("no residual recorded for " + relation + " on " + subspace);
}

nlohmann::json CKVerification::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["tol"] = tol;
  j["max_residual"] = max_residual();
  j["zero_projections"] = zero_projections;
  j["residuals"] = nlohmann::json::array();
  for (const auto& r : residuals) {
    j["residuals"].push_back({{"relation", r.relation},
                              {"subspace", r.subspace},
                              {"residual", r.residual},
                              {"witness", r.witness},
                              {"ok", r.residual <= tol}});
  }
  return j;
}

CKVerification verify_ck_family(const MatrixCKFamily& family, const DirectedGraph& graph,
                                double tol) {
  CKVerification rep;
  rep.tol = tol;
  const auto n = static_cast<Eigen::Index>(family.dim);
  auto lookup = [&](const std::map<std::string, Matrix>& m, const std::string& key) -> const Matrix& {
    auto it = m.find(key);
    if (it == m.end()) throw InputError("family has no matrix for " + key);
    if (it->second.rows() != n || it->second.cols() != n) {
      throw InputError("matrix for " + key + " has inconsistent dimensions");
    }
    return it->second;
  };

  struct Tracker {
    std::string relation, subspace;
    double worst = 0.0;
    std::string witness;
    void see(double r, const std::string& w) {
      if (witness.empty() || r > worst) {
        worst = std::max(worst, r);
        witness = w;
      }
    }
  };
  Tracker idem{"projection_idempotent", "full"}, selfadj{"projection_selfadjoint", "full"},
      porth{"projections_orthogonal", "full"}, rel1{"(i) s_e*s_e = p_s(e)", "full"},
      rel2{"(ii) s_e s_e* <= p_r(e)", "full"}, rorth{"ranges_orthogonal", "full"},
      rel3{"(iii) p_v = sum s_e s_e*", "full"};

  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    const Matrix& p = lookup(family.P, graph.vertex_name(v));
    idem.see(op_norm(p * p - p), graph.vertex_name(v));
    selfadj.see(op_norm(p - p.adjoint()), graph.vertex_name(v));
    if (op_norm(p) <= tol) rep.zero_projections.push_back(graph.vertex_name(v));
    for (VertexId w = v + 1; w < graph.num_vertices(); ++w) {
      const Matrix& q = lookup(family.P, graph.vertex_name(w));
      porth.see(op_norm(p * q), graph.vertex_name(v) + "," + graph.vertex_name(w));
    }
  }
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    const Matrix& s = lookup(family.S, graph.edge_name(e));
    const Matrix& ps = lookup(family.P, graph.vertex_name(graph.src(e)));
    const Matrix& pr = lookup(family.P, graph.vertex_name(graph.rng(e)));
    const Matrix range = s * s.adjoint();
    rel1.see(op_norm(s.adjoint() * s - ps), graph.edge_name(e));
    rel2.see(op_norm(pr * range - range), graph.edge_name(e));
    for (EdgeId f = e + 1; f < graph.num_edges(); ++f) {
      const Matrix& t = lookup(family.S, graph.edge_name(f));
      rorth.see(op_norm(s.adjoint() * t), graph.edge_name(e) + "," + graph.edge_name(f));
    }
  }
  for (VertexId v = 0; v < graph.num_vertices(); ++v) {
    if (graph.in_edges(v).empty()) continue;
    Matrix sum = family.zero();
    for (EdgeId e : graph.in_edges(v)) {
      const Matrix& s = lookup(family.S, graph.edge_name(e));
      sum += s * s.adjoint();
    }
    rel3.see(op_norm(lookup(family.P, graph.vertex_name(v)) - sum), graph.vertex_name(v));
  }
  for (const Tracker* t : {&idem, &selfadj, &porth, &rel1, &rel2, &rorth, &rel3}) {
    rep.residuals.push_back({t->relation, t->subspace, t->worst, t->witness});
  }

  if (family.truncation_depth && family.basis_lengths.size() == family.dim) {
    const std::size_t L = *family.truncation_depth;
    const Matrix inner = family.length_window(0, L - 1);
    const Matrix outer = family.length_window(1, L);
    Tracker w1{"(i) s_e*s_e = p_s(e)", "lengths 0.." + std::to_string(L - 1)};
    Tracker w3{"(iii) p_v = sum s_e s_e*", "lengths 1.." + std::to_string(L)};
    for (EdgeId e = 0; e < graph.num_edges(); ++e) {
      const Matrix& s = family.s(graph, e);
      w1.see(op_norm((s.adjoint() * s - family.p(graph, graph.src(e))) * inner), graph.edge_name(e));
    }
    for (VertexId v = 0; v < graph.num_vertices(); ++v) {
      if (graph.in_edges(v).empty()) continue;
      Matrix sum = family.zero();
      for (EdgeId e : graph.in_edges(v)) sum += family.s(graph, e) * family.s(graph, e).adjoint();
      w3.see(op_norm(outer * (family.p(graph, v) - sum) * outer), graph.vertex_name(v));
    }
    rep.residuals.push_back({w1.relation, w1.subspace, w1.worst, w1.witness});
    rep.residuals.push_back({w3.relation, w3.subspace, w3.worst, w3.witness});
  }
  return rep;
}

Matrix evaluate(const SymbolicElement& x, const MatrixCKFamily& family) {
  Matrix out = family.zero();
  if (!x.graph()) return out;
  const DirectedGraph& g = *x.graph();
  auto word = [&](const Path& p) -> Matrix {
    if (p.empty()) return family.p(g, p.source);
    Matrix m = family.s(g, p.edges.front());
    for (std::size_t i = 1; i < p.edges.size(); ++i) m = m * family.s(g, p.edges[i]);
    return m;
  };
  for (const auto& [m, c] : x.terms()) {
    out += c.to_complex() * (word(m.mu) * word(m.nu).adjoint());
  }
  return out;
}

nlohmann::json MatrixCKFamily::to_json() const {
  nlohmann::json j;
  j["schema"] = "ckgen-family/1";
  j["dim"] = dim;
  j["basis"] = basis_labels;
  if (basis_lengths.size() == dim) j["basis_lengths"] = basis_lengths;
  if (truncation_depth) {
    j["exactness"] = {{"mode", "truncated"}, {"depth", *truncation_depth}};
  } else {
    j["exactness"] = {{"mode", "exact"}};
  }
  j["P"] = nlohmann::json::object();
  for (const auto& [k, m] : P) j["P"][k] = matrix_to_json(m);
  j["S"] = nlohmann::json::object();
  for (const auto& [k, m] : S) j["S"][k] = matrix_to_json(m);
  return j;
}

MatrixCKFamily MatrixCKFamily::from_json(const nlohmann::json& j) {
  MatrixCKFamily f;
  try {
    f.dim = j.at("dim").get<std::size_t>();
    f.basis_labels = j.at("basis").get<std::vector<std::string>>();
    if (j.contains("basis_lengths")) f.basis_lengths = j.at("basis_lengths").get<std::vector<std::size_t>>();
    const auto& ex = j.at("exactness");
    const std::string mode = ex.at("mode").get<std::string>();
    if (mode == "truncated") {
      f.truncation_depth = ex.at("depth").get<std::size_t>();
    } else if (mode != "exact") {
      throw InputError("unknown exactness mode " + mode);
    }
    auto read = [&](const char* key, std::map<std::string, Matrix>& out) {
      for (const auto& [name, mj] : j.at(key).items()) {
        Matrix m = matrix_from_json(mj);
        if (static_cast<std::size_t>(m.rows()) != f.dim) {
          throw InputError(std::string(key) + "[" + name + "] does not match dim " + std::to_string(f.dim));
        }
        out.emplace(name, std::move(m));
      }
    };
    read("P", f.P);
    read("S", f.S);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed family file: ") + e.what());
  }
  if (f.basis_labels.size() != f.dim) throw InputError("basis label count does not match dim");
  return f;
}

MatrixCKFamily load_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open family file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed family file: ") + e.what());
  }
  return MatrixCKFamily::from_json(j);
}

void save_family(const MatrixCKFamily& family, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write family file " + path);
  out << family.to_json().dump(1) << "\n";
}

}  // namespace ckgen
