#include "ckgen/closure.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <set>

#include "ckgen/error.hpp"

namespace ckgen {

namespace {

using Flat = Eigen::Map<const Eigen::VectorXcd>;

/// Orthonormal columns in C^{n^2}; each column is a flattened matrix.
class Basis {
 public:
  explicit Basis(Eigen::Index n) : n_(n), cols_(Matrix::Zero(n * n, 0)) {}

  /// Appends the components of the candidates orthogonal to the current
  /// span; returns the indices of the new columns.
  /// A candidate counts as new when its residual exceeds rel_tol times its
  /// scale (the size of the operands that produced it, not its own norm,
  /// which cancellation can make arbitrarily small).
  std::vector<Eigen::Index> absorb(const Matrix& candidates, const Eigen::VectorXd& scale, double rel_tol) {
    // One block projection settles most candidates: anything already in the
    // span leaves a residual at rounding level and is dropped right away.
    Matrix c = candidates;
    if (cols_.cols() > 0) c -= cols_ * (cols_.adjoint() * c);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (c.col(j).norm() > rel_tol * scale[j]) keep.push_back(j);
    }
    if (keep.empty()) return {};
    Matrix survivors(c.rows(), static_cast<Eigen::Index>(keep.size()));
    Eigen::VectorXd survivor_scale(survivors.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      survivors.col(static_cast<Eigen::Index>(i)) = c.col(keep[i]);
      survivor_scale[static_cast<Eigen::Index>(i)] = scale[keep[i]];
    }
    if (cols_.cols() > 0) survivors -= cols_ * (cols_.adjoint() * survivors);

    std::vector<Eigen::Index> added;
    for (Eigen::Index j = 0; j < survivors.cols(); ++j) {
      Eigen::VectorXcd v = survivors.col(j);
      const Eigen::Index first = cols_.cols() - static_cast<Eigen::Index>(added.size());
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index k = first; k < cols_.cols(); ++k) {
          v -= cols_.col(k) * cols_.col(k).dot(v);
        }
      }
      const double r = v.norm();
      if (r <= rel_tol * survivor_scale[j]) continue;
      if (cols_.cols() >= n_ * n_) throw InvariantError("span closure exceeded the ambient dimension");
      // Normalizing a small residual magnifies its rounding error, so the
      // accepted vector is orthogonalized once more against everything.
      v /= r;
      for (int pass = 0; pass < 2; ++pass) {
        v -= cols_ * (cols_.adjoint() * v);
        v.normalize();
      }
      cols_.conservativeResize(Eigen::NoChange, cols_.cols() + 1);
      cols_.col(cols_.cols() - 1) = v;
      added.push_back(cols_.cols() - 1);
      if (cols_.cols() == n_ * n_) break;  // the whole matrix algebra
    }
    return added;
  }

  Matrix unflatten(Eigen::Index k) const {
    return Eigen::Map<const Matrix>(cols_.col(k).data(), n_, n_);
  }
  const Matrix& columns() const { return cols_; }

 private:
  Eigen::Index n_;
  Matrix cols_;
};

Eigen::VectorXcd flatten(const Matrix& m) { return Flat(m.data(), m.size()); }

/// A partial permutation matrix as a map on basis vectors: column j holds a
/// single 1 in row image[j], or is zero when image[j] == -1.
using PartialPerm = std::vector<int>;

std::optional<PartialPerm> as_partial_perm(const Matrix& m) {
  PartialPerm image(static_cast<std::size_t>(m.cols()), -1);
  std::vector<bool> row_used(static_cast<std::size_t>(m.rows()), false);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const Complex z = m(i, j);
      if (z == Complex(0.0, 0.0)) continue;
      if (z != Complex(1.0, 0.0) || image[static_cast<std::size_t>(j)] != -1 || row_used[static_cast<std::size_t>(i)]) {
        return std::nullopt;
      }
      image[static_cast<std::size_t>(j)] = static_cast<int>(i);
      row_used[static_cast<std::size_t>(i)] = true;
    }
  }
  return image;
}

PartialPerm compose(const PartialPerm& a, const PartialPerm& b) {
  PartialPerm out(b.size(), -1);
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] >= 0) out[j] = a[static_cast<std::size_t>(b[j])];
  }
  return out;
}

/// Products of partial permutations are partial permutations, so the words
/// in the generators form a finite set that can be enumerated exactly. The
/// algebra is the linear span of that set. Returns nullopt when the word
/// count passes `cap`.
std::optional<SpanClosure> monomial_closure(const std::vector<PartialPerm>& gens, Eigen::Index n,
                                            double rel_tol, std::size_t cap) {
  std::set<PartialPerm> seen;
  std::vector<PartialPerm> words, frontier;
  const PartialPerm zero(static_cast<std::size_t>(n), -1);
  for (const PartialPerm& g : gens) {
    if (g != zero && seen.insert(g).second) frontier.push_back(g);
  }
  SpanClosure out;
  while (!frontier.empty()) {
    ++out.rounds;
    words.insert(words.end(), frontier.begin(), frontier.end());
    if (words.size() > cap) return std::nullopt;
    std::vector<PartialPerm> next;
    for (const PartialPerm& w : frontier) {
      for (const PartialPerm& g : gens) {
        PartialPerm p = compose(g, w);
        if (p != zero && seen.insert(p).second) next.push_back(std::move(p));
      }
    }
    frontier = std::move(next);
  }
  if (words.empty()) return out;
  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(n * n, static_cast<Eigen::Index>(words.size()));
  for (std::size_t k = 0; k < words.size(); ++k) {
    for (std::size_t j = 0; j < words[k].size(); ++j) {
      if (words[k][j] >= 0) flat(static_cast<Eigen::Index>(j) * n + words[k][j], static_cast<Eigen::Index>(k)) = 1.0;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(flat);
  qr.setThreshold(rel_tol);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n * n, rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    const Eigen::VectorXd col = q.col(k);
    out.basis.push_back(Eigen::Map<const Eigen::MatrixXd>(col.data(), n, n).cast<Complex>());
  }
  return out;
}

}  // namespace

double SpanClosure::distance_of(const std::vector<Matrix>& xs) const {
  double worst = 0.0;
  for (const Matrix& x : xs) {
    const double nx = x.norm();
    if (nx == 0.0) continue;
    Eigen::VectorXcd r = flatten(x);
    for (int pass = 0; pass < 2; ++pass) {
      for (const Matrix& b : basis) r -= flatten(b) * flatten(b).dot(r);
    }
    worst = std::max(worst, r.norm() / nx);
  }
  return worst;
}

SpanClosure span_closure(const std::vector<Matrix>& generators, double rel_tol) {
  SpanClosure out;
  if (generators.empty()) return out;
  const Eigen::Index n = generators.front().rows();
  std::vector<Matrix> gens;
  for (const Matrix& g : generators) {
    if (g.rows() != n || g.cols() != n) throw InputError("span closure needs square matrices of one size");
    gens.push_back(g);
    gens.push_back(g.adjoint());
  }
  std::vector<PartialPerm> perms;
  for (const Matrix& g : gens) {
    auto p = as_partial_perm(g);
    if (!p) break;
    perms.push_back(std::move(*p));
  }
  if (perms.size() == gens.size()) {
    const auto cap = static_cast<std::size_t>(4 * n * n + 64);
    if (auto fast = monomial_closure(perms, n, rel_tol, cap)) return *fast;
  }
  Basis basis(n);
  Matrix start(n * n, static_cast<Eigen::Index>(gens.size()));
  for (std::size_t i = 0; i < gens.size(); ++i) start.col(static_cast<Eigen::Index>(i)) = flatten(gens[i]);
  Eigen::VectorXd gen_norms(static_cast<Eigen::Index>(gens.size()));
  for (std::size_t i = 0; i < gens.size(); ++i) gen_norms[static_cast<Eigen::Index>(i)] = gens[i].norm();
  std::vector<Eigen::Index> fresh = basis.absorb(start, gen_norms, rel_tol);
  while (!fresh.empty()) {
    ++out.rounds;
    const auto count = static_cast<Eigen::Index>(fresh.size() * gens.size());
    Matrix cand(n * n, count);
    Eigen::VectorXd scale(count);
    Eigen::Index col = 0;
    for (Eigen::Index k : fresh) {
      const Matrix x = basis.unflatten(k);  // unit Frobenius norm
      for (std::size_t i = 0; i < gens.size(); ++i) {
        scale[col] = gen_norms[static_cast<Eigen::Index>(i)];
        cand.col(col++) = flatten(gens[i] * x);
      }
    }
    fresh = basis.absorb(cand, scale, rel_tol);
  }
  for (Eigen::Index k = 0; k < basis.columns().cols(); ++k) out.basis.push_back(basis.unflatten(k));
  return out;
}

SingleGeneration single_generation_check(const Matrix& g, const MatrixCKFamily& family,
                                         double containment_tol) {
  std::vector<Matrix> gens;
  for (const auto& [k, p] : family.P) gens.push_back(p);
  for (const auto& [k, s] : family.S) gens.push_back(s);
  const SpanClosure fam = span_closure(gens);
  const SpanClosure gen = span_closure({g});
  SingleGeneration r;
  r.dim_g = gen.dim();
  r.dim_family = fam.dim();
  // Both spans are algebras, so containing the other side's generators is
  // the same as containing its whole algebra.
  r.family_in_g = gen.distance_of(gens);
  r.g_in_family = fam.distance_of({g});
  r.generated = r.dim_g == r.dim_family && r.family_in_g <= containment_tol && r.g_in_family <= containment_tol;
  return r;
}

DirectedGraph random_acyclic_graph(std::uint64_t seed, std::size_t max_vertices, std::size_t max_edges,
                                   std::size_t max_sink_indegree) {
  if (max_vertices < 1 || max_sink_indegree < 1) throw InputError("random graph bounds must be >= 1");
  std::mt19937_64 rng(seed);
  const std::size_t nv = std::uniform_int_distribution<std::size_t>(1, max_vertices)(rng);
  const std::size_t ne = nv < 2 ? 0 : std::uniform_int_distribution<std::size_t>(0, max_edges)(rng);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::uniform_int_distribution<std::size_t> pick(0, nv - 1);
  while (edges.size() < ne) {
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    edges.emplace_back(a, b);
  }
  // Prune edges into overfull sinks; removing an edge can create a new sink,
  // so repeat until stable.
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> out(nv, 0), in(nv, 0);
    for (auto [a, b] : edges) ++out[a];
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (auto [a, b] : edges) {
      if (out[b] == 0 && in[b] >= max_sink_indegree) {
        changed = true;
        continue;
      }
      ++in[b];
      kept.emplace_back(a, b);
    }
    edges = std::move(kept);
  }
  DirectedGraph g;
  for (std::size_t i = 0; i < nv; ++i) g.add_vertex("v" + std::to_string(i));
  for (std::size_t k = 0; k < edges.size(); ++k) {
    g.add_edge("e" + std::to_string(k), "v" + std::to_string(edges[k].first),
               "v" + std::to_string(edges[k].second));
  }
  return g;
}

std::size_t path_space_dimension(const DirectedGraph& graph) {
  if (!graph.is_acyclic()) throw InputError("path space of a cyclic graph is infinite");
  // Paths ending at v, by memoised recursion over in-edges.
  std::vector<std::size_t> ending(graph.num_vertices(), 0);
  std::vector<bool> done(graph.num_vertices(), false);
  auto count = [&](auto&& self, VertexId v) -> std::size_t {
    if (done[v]) return ending[v];
    std::size_t c = graph.in_edges(v).empty() ? 1 : 0;
    for (EdgeId e : graph.in_edges(v)) c += self(self, graph.src(e));
    done[v] = true;
    return ending[v] = c;
  };
  std::size_t total = 0;
  for (VertexId v = 0; v < graph.num_vertices(); ++v) total += count(count, v);
  return total;
}

DirectedGraph random_corpus_graph(std::uint64_t seed, std::size_t max_vertices, std::size_t max_edges,
                                  std::size_t max_sink_indegree, std::size_t max_dim) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    DirectedGraph g = random_acyclic_graph(seed * 1000003ULL + attempt, max_vertices, max_edges,
                                           max_sink_indegree);
    if (path_space_dimension(g) <= max_dim) return g;
  }
}

}  // namespace ckgen
