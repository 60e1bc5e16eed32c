#include "ckgen/closure.hpp"
#include "ckgen/error.hpp"
#include "ckgen/generator.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace ckgen;

namespace {

std::vector<Matrix> family_generators(const MatrixCKFamily& f) {
  std::vector<Matrix> out;
  for (const auto& [name, p] : f.P) out.push_back(p);
  for (const auto& [name, s] : f.S) out.push_back(s);
  return out;
}

}  // namespace

TEST_CASE("closure dimensions of small algebras") {
  const DirectedGraph g2 = fixtures::graph("G2");
  const MatrixCKFamily f2 = build_path_representation(g2);
  // S_e and S_e^* generate all of M_2.
  CHECK(span_closure({f2.s(g2, 0)}).dim() == 4);
  CHECK(span_closure({Matrix::Identity(3, 3)}).dim() == 1);
  CHECK(span_closure({}).dim() == 0);

  const DirectedGraph g3 = fixtures::graph("G3");
  const MatrixCKFamily f3 = build_path_representation(g3);
  CHECK(span_closure(family_generators(f3)).dim() == 9);
  CHECK(span_closure({f3.p(g3, g3.vertex("u"))}).dim() == 1);

  // Two orthogonal rank-one projections span the diagonal pair only.
  const DirectedGraph g6 = fixtures::graph("G6");
  const MatrixCKFamily f6 = build_path_representation(g6);
  CHECK(span_closure({f6.p(g6, g6.vertex("w1")), f6.p(g6, g6.vertex("w2"))}).dim() == 2);

  CHECK_THROWS_AS(span_closure({Matrix::Identity(2, 2), Matrix::Identity(3, 3)}), InputError);
}

TEST_CASE("the closure is an algebra") {
  const DirectedGraph g = random_corpus_graph(12, 8, 14, 4, 40);
  const MatrixCKFamily f = build_path_representation(g);
  const SpanClosure c = span_closure(family_generators(f));
  REQUIRE(c.dim() > 0);
  // Products and adjoints of basis elements stay in the span.
  std::vector<Matrix> products;
  for (std::size_t i = 0; i < c.dim(); i += 3) {
    for (std::size_t j = 0; j < c.dim(); j += 5) products.push_back(c.basis[i] * c.basis[j]);
    products.push_back(c.basis[i].adjoint());
  }
  CHECK(c.distance_of(products) < 1e-9);
  // Idempotent: closing the basis again adds nothing.
  CHECK(span_closure(c.basis).dim() == c.dim());
  // Monotone: dropping generators cannot enlarge it.
  std::vector<Matrix> fewer = family_generators(f);
  fewer.resize(fewer.size() / 2);
  CHECK(span_closure(fewer).dim() <= c.dim());
}

TEST_CASE("exact and floating-point closures agree") {
  for (std::uint64_t seed : {2u, 7u, 19u, 33u}) {
    const DirectedGraph g = random_corpus_graph(seed, 7, 10, 3, 25);
    const MatrixCKFamily f = build_path_representation(g);
    std::vector<Matrix> gens = family_generators(f);
    const std::size_t exact = span_closure(gens).dim();
    // Scaling the generators leaves the algebra alone but rules out the
    // partial-permutation shortcut.
    for (Matrix& m : gens) m *= 0.7;
    CAPTURE(seed);
    CHECK(span_closure(gens).dim() == exact);
  }
}

TEST_CASE("single generation") {
  SUBCASE("G2") {
    const DirectedGraph g = fixtures::graph("G2");
    const Classification c = classify(g);
    const MatrixCKFamily f = build_path_representation(g);
    const GeneratorParts parts = build_generator(f, g, c, default_schedule(g, c));
    const SingleGeneration r = single_generation_check(parts.g, f);
    CHECK(r.generated);
    CHECK(r.dim_g == 4);
    CHECK(r.dim_family == 4);
    CHECK(r.family_in_g < 1e-9);
    CHECK(r.g_in_family < 1e-9);
  }
  SUBCASE("G3: a vertex projection is far too small") {
    const DirectedGraph g = fixtures::graph("G3");
    const MatrixCKFamily f = build_path_representation(g);
    const SingleGeneration r = single_generation_check(f.p(g, g.vertex("u")), f);
    CHECK_FALSE(r.generated);
    CHECK(r.dim_g == 1);
    CHECK(r.dim_family == 9);
    CHECK(r.family_in_g > 0.1);
  }
  SUBCASE("G1: a multiple of the identity suffices") {
    const DirectedGraph g = fixtures::graph("G1");
    const MatrixCKFamily f = build_path_representation(g);
    const SingleGeneration r = single_generation_check(0.5 * f.p(g, 0), f);
    CHECK(r.generated);
    CHECK(r.dim_g == 1);
    CHECK(r.dim_family == 1);
  }
  SUBCASE("G4 without d") {
    const DirectedGraph g = fixtures::graph("G4");
    const Classification c = classify(g);
    const MatrixCKFamily f = build_path_representation(g);
    const GeneratorParts parts = build_generator(f, g, c, default_schedule(g, c));
    CHECK(single_generation_check(parts.g, f).generated);
    CHECK_FALSE(single_generation_check(parts.a + parts.b + parts.c, f).generated);
  }
}
