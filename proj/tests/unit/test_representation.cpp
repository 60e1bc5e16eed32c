#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ckgen/closure.hpp"
#include "ckgen/error.hpp"
#include "ckgen/representation.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace ckgen;

namespace {

Matrix unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  Matrix m = Matrix::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

std::size_t index_of(const MatrixCKFamily& f, const std::string& label) {
  for (std::size_t i = 0; i < f.basis_labels.size(); ++i) {
    if (f.basis_labels[i] == label) return i;
  }
  FAIL("missing basis label " << label);
  return 0;
}

}  // namespace

TEST_CASE("G2: two basis paths and a matrix unit") {
  const DirectedGraph g = fixtures::graph("G2");
  const MatrixCKFamily f = build_path_representation(g);
  REQUIRE(f.dim == 2);
  CHECK(f.basis_labels == std::vector<std::string>{"u", "e"});
  CHECK(f.exact());
  CHECK(f.s(g, 0) == unit(2, 1, 0));
  CHECK(f.p(g, g.vertex("u")) == unit(2, 0, 0));
  CHECK(f.p(g, g.vertex("w")) == unit(2, 1, 1));
}

TEST_CASE("G3 and G1") {
  const DirectedGraph g3 = fixtures::graph("G3");
  const MatrixCKFamily f3 = build_path_representation(g3);
  REQUIRE(f3.dim == 3);
  const auto fi = static_cast<Eigen::Index>(index_of(f3, "f·i"));
  CHECK(f3.p(g3, g3.vertex("w")) == unit(3, fi, fi));

  const DirectedGraph g1 = fixtures::graph("G1");
  const MatrixCKFamily f1 = build_path_representation(g1);
  REQUIRE(f1.dim == 1);
  CHECK(f1.p(g1, 0)(0, 0) == Complex(1.0, 0.0));
}

TEST_CASE("a chain of length k has k+1 paths from its head") {
  for (int k = 0; k <= 7; ++k) {
    DirectedGraph g;
    for (int v = 0; v <= k; ++v) g.add_vertex("v" + std::to_string(v));
    for (int e = 0; e < k; ++e) {
      g.add_edge("e" + std::to_string(e), "v" + std::to_string(e), "v" + std::to_string(e + 1));
    }
    CHECK(build_path_representation(g).dim == static_cast<std::size_t>(k + 1));
  }
}

TEST_CASE("exact families satisfy every relation with residual 0") {
  for (const char* name : {"G1", "G2", "G3", "G4", "G6"}) {
    const DirectedGraph g = fixtures::graph(name);
    const CKVerification v = verify_ck_family(build_path_representation(g), g, 1e-12);
    CAPTURE(name);
    CHECK(v.passed());
    CHECK(v.max_residual() == 0.0);
  }
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const DirectedGraph g = random_corpus_graph(seed, 8, 14, 4, 40);
    const MatrixCKFamily f = build_path_representation(g);
    CAPTURE(seed);
    CHECK(verify_ck_family(f, g, 1e-12).max_residual() == 0.0);
    CHECK(f.dim == path_space_dimension(g));
    for (const auto& [v, p] : f.P) CHECK(p.norm() > 0.0);
  }
}

TEST_CASE("the verifier measures a scaled edge") {
  const DirectedGraph g = fixtures::graph("G3");
  MatrixCKFamily f = build_path_representation(g);
  f.S.at("i") *= 1.1;
  const CKVerification v = verify_ck_family(f, g, 1e-12);
  CHECK_FALSE(v.passed());
  // |1.1^2 - 1| on the image of the source projection.
  CHECK(v.residual("(i) s_e*s_e = p_s(e)") == doctest::Approx(0.21).epsilon(1e-12));
}

TEST_CASE("truncated families") {
  const DirectedGraph loop = fixtures::graph("G5");
  SUBCASE("G5 at depth 4") {
    const MatrixCKFamily f = build_truncated_representation(loop, 4);
    CHECK(f.dim == 5);
    CHECK_FALSE(f.exact());
    const CKVerification v = verify_ck_family(f, loop, 1e-12);
    CHECK(v.residual("(iii) p_v = sum s_e s_e*", "lengths 1..4") == 0.0);
    CHECK(v.residual("(i) s_e*s_e = p_s(e)", "lengths 0..3") == 0.0);
    // On the whole space the deepest layer breaks (i) and (iii).
    CHECK(v.residual("(i) s_e*s_e = p_s(e)") == doctest::Approx(1.0));
    CHECK(v.window_passed());
  }
  SUBCASE("G5 at depth 1") { CHECK(build_truncated_representation(loop, 1).dim == 2); }
  SUBCASE("acyclic graphs are unaffected once the depth covers every path") {
    const DirectedGraph g3 = fixtures::graph("G3");
    const MatrixCKFamily t = build_truncated_representation(g3, 2);
    const MatrixCKFamily e = build_path_representation(g3);
    CHECK(t.basis_labels == e.basis_labels);
    CHECK(t.P == e.P);
    CHECK(t.S == e.S);
  }
  SUBCASE("cyclic graphs need truncation") { CHECK_THROWS_AS(build_path_representation(loop), InputError); }
}

TEST_CASE("spectra") {
  SUBCASE("zero matrix") {
    const Spectrum s = spectrum(Matrix::Zero(3, 3));
    CHECK(s.eigenvalues.isZero());
  }
  SUBCASE("rank-2 projection") {
    Matrix p = Matrix::Zero(3, 3);
    p(0, 0) = p(2, 2) = 1.0;
    const Spectrum s = spectrum(p);
    CHECK(s.eigenvalues[0] == doctest::Approx(0.0));
    CHECK(s.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(s.eigenvalues[2] == doctest::Approx(1.0));
    const auto cl = s.clusters(1e-9);
    REQUIRE(cl.size() == 2);
    CHECK(cl[1].multiplicity == 2);
    CHECK((cl[1].projection - p).norm() < 1e-12);
  }
  SUBCASE("non-square input") { CHECK_THROWS_AS(spectrum(Matrix::Zero(2, 3)), InputError); }
}

TEST_CASE("family files") {
  const auto dir = std::filesystem::temp_directory_path();
  SUBCASE("round trip is exact") {
    const DirectedGraph g = fixtures::graph("G3");
    const MatrixCKFamily f = build_path_representation(g);
    const std::string path = (dir / "ckgen_family_roundtrip.json").string();
    save_family(f, path);
    CHECK(load_family(path) == f);
    std::remove(path.c_str());
  }
  SUBCASE("hand-written G2 family verifies") {
    const DirectedGraph g = fixtures::graph("G2");
    const MatrixCKFamily f = load_family(fixtures::data("G2_family.json"));
    CHECK(verify_ck_family(f, g, 1e-12).passed());
  }
  SUBCASE("non-square matrix is rejected") {
    const std::string path = (dir / "ckgen_family_bad.json").string();
    std::ofstream(path) << R"({"schema": "ckgen-family/1", "dim": 2, "basis": ["u", "e"],
        "exactness": {"mode": "exact"}, "P": {"u": [[[1,0],[0,0]]]}, "S": {}})";
    CHECK_THROWS_AS(load_family(path), InputError);
    std::remove(path.c_str());
  }
}

TEST_CASE("symbolic and matrix pictures agree") {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed : {3u, 8u, 13u, 31u}) {
    const auto g = std::make_shared<const DirectedGraph>(random_corpus_graph(seed, 7, 10, 3, 30));
    const MatrixCKFamily f = build_path_representation(*g);
    if (g->num_edges() == 0) continue;
    std::uniform_int_distribution<EdgeId> pick_e(0, g->num_edges() - 1);
    std::uniform_int_distribution<VertexId> pick_v(0, g->num_vertices() - 1);
    std::vector<SymbolicElement> samples;
    for (int trial = 0; trial < 25; ++trial) {
      // A random word in s_e, s_e^* and p_v.
      SymbolicElement x = SymbolicElement::p(g, pick_v(rng));
      for (int k = 0; k < 3; ++k) {
        const EdgeId e = pick_e(rng);
        SymbolicElement s = SymbolicElement::s(g, e);
        if (rng() % 2) s = adjoint(s);
        x = x * s + SymbolicElement::p(g, pick_v(rng));
      }
      CAPTURE(x.to_string());
      // expand_ck3 changes the normal form but not the operator.
      CHECK((evaluate(expand_ck3(x), f) - evaluate(x, f)).norm() < 1e-12);
      samples.push_back(expand_ck3(x));
    }
    // Faithfulness proxy: different normal forms give different matrices.
    for (std::size_t a = 0; a < samples.size(); ++a) {
      for (std::size_t b = a + 1; b < samples.size(); ++b) {
        if (samples[a] == samples[b]) continue;
        CHECK((evaluate(samples[a], f) - evaluate(samples[b], f)).norm() > 1e-9);
      }
    }
  }
}
