#include <cmath>

#include "ckgen/closure.hpp"
#include "ckgen/error.hpp"
#include "ckgen/extraction.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace ckgen;

namespace {

struct Case {
  DirectedGraph graph;
  Classification cls;
  MatrixCKFamily family;
  CoefficientSchedule schedule;
  GeneratorParts parts;
};

Case make(DirectedGraph g) {
  Case c{std::move(g), {}, {}, {}, {}};
  c.cls = classify(c.graph);
  c.family = build_path_representation(c.graph);
  c.schedule = default_schedule(c.graph, c.cls);
  c.parts = build_generator(c.family, c.graph, c.cls, c.schedule);
  return c;
}

ExtractionResult extract(const Case& c, ExtractionOptions o = {}) {
  return run_full_extraction(c.parts.g, c.graph, c.cls, c.schedule, c.parts.intervals, &c.family, o);
}

Matrix unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  Matrix m = Matrix::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("G2: the sink-edge stage by hand") {
  const Case c = make(fixtures::graph("G2"));
  // g = [[0, 0], [1/8, 3/4]]; the Riesz projector at 3/4 is E_ee + (1/6) E_eu.
  const Matrix expected_y = unit(2, 1, 1) + unit(2, 1, 0) / 6.0;
  for (ExtractionMode mode : {ExtractionMode::Power, ExtractionMode::Spectral}) {
    ExtractionOptions o;
    o.mode = mode;
    const SinkEdgeRecovery r = recover_sink_edge(c.parts.g, 0.75, 0.125, 2.0 / 3.0, o);
    CAPTURE(to_string(mode));
    CHECK((r.y - expected_y).norm() < 1e-9);
    CHECK(r.z_norm == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    CHECK((r.T - c.family.s(c.graph, 0)).norm() < 1e-9);
    CHECK((r.range_projection - unit(2, 1, 1)).norm() < 1e-9);
  }
  const ExtractionResult res = extract(c);
  CHECK(res.report.passed());
  CHECK(res.report.max_residual() < 1e-9);
}

TEST_CASE("fixtures extract within tolerance") {
  for (const char* name : {"G1", "G2", "G3", "G4", "G6"}) {
    const Case c = make(fixtures::graph(name));
    const ExtractionResult res = extract(c);
    CAPTURE(name);
    CHECK(res.report.compared);
    CHECK(res.report.passed());
    CHECK(res.report.max_residual() < 1e-8);
    CHECK(verify_ck_family(res.recovered, c.graph, 1e-6).passed());
  }
}

TEST_CASE("power and spectral modes agree") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const Case c = make(random_corpus_graph(seed, 8, 14, 4, 40));
    ExtractionOptions power, spectral;
    power.mode = ExtractionMode::Power;
    spectral.mode = ExtractionMode::Spectral;
    const ExtractionResult a = extract(c, power);
    const ExtractionResult b = extract(c, spectral);
    CAPTURE(seed);
    CHECK(a.report.passed());
    CHECK(b.report.passed());
    for (const auto& [name, s] : a.recovered.S) CHECK((s - b.recovered.S.at(name)).norm() <= 1e-5);
    for (const StageRecord& st : a.report.stages) {
      if (!std::isnan(st.mode_agreement)) CHECK(st.mode_agreement <= 1e-5);
    }
  }
}

TEST_CASE("random corpus, default options") {
  for (std::uint64_t seed = 26; seed <= 60; ++seed) {
    const Case c = make(random_corpus_graph(seed, 8, 14, 4, 40));
    const ExtractionResult res = extract(c);
    CAPTURE(seed);
    CHECK(res.report.passed());
    CHECK(verify_ck_family(res.recovered, c.graph, 1e-6).passed());
    CHECK(res.report.order == (interior_emits_sink_edge(c.graph, c.cls) ? "sinks-first" : "interior-first"));
  }
}

TEST_CASE("extraction order") {
  SUBCASE("parsing") {
    CHECK(parse_order("auto") == ExtractionOrder::Auto);
    CHECK(parse_order("sinks-first") == ExtractionOrder::SinksFirst);
    CHECK(to_string(ExtractionOrder::InteriorFirst) == "interior-first");
    CHECK_THROWS_AS(parse_order("sideways"), InputError);
  }
  SUBCASE("an interior vertex feeding a sink defeats interior-first") {
    const Case c = make(fixtures::graph("shortcut"));
    CHECK(interior_emits_sink_edge(c.graph, c.cls));
    ExtractionOptions o;
    o.order = ExtractionOrder::InteriorFirst;
    CHECK_THROWS_WITH_AS(extract(c, o), doctest::Contains("margin"), InvariantError);
    const ExtractionResult res = extract(c);
    CHECK(res.report.order == "sinks-first");
    CHECK(res.report.passed());
    CHECK(res.report.max_residual() < 1e-8);
  }
  SUBCASE("both orders agree where both apply") {
    const Case c = make(fixtures::graph("G4"));
    CHECK_FALSE(interior_emits_sink_edge(c.graph, c.cls));
    ExtractionOptions first, last;
    first.order = ExtractionOrder::InteriorFirst;
    last.order = ExtractionOrder::SinksFirst;
    const ExtractionResult a = extract(c, first);
    const ExtractionResult b = extract(c, last);
    CHECK(a.report.passed());
    CHECK(b.report.passed());
    for (const auto& [name, s] : a.recovered.S) CHECK((s - b.recovered.S.at(name)).norm() <= 1e-8);
  }
}

TEST_CASE("an interval that swallows a forbidden eigenvalue is refused") {
  const Case c = make(fixtures::graph("G3"));
  IntervalAssignment wide = c.parts.intervals;
  REQUIRE(wide.intervals.size() == 1);
  // (b+c)^*(b+c) has the eigenvalue 9/16 + 1/64 on G3; stretch the interval over it.
  wide.intervals[0].theta = 1e-6;
  wide.intervals[0].theta_prime = 0.99;
  wide.intervals[0].mu = 1.0;
  CHECK_THROWS_AS(run_full_extraction(c.parts.g, c.graph, c.cls, c.schedule, wide, &c.family), InvariantError);
}

TEST_CASE("sink-free graphs") {
  for (const char* name : {"G5", "two_cycle"}) {
    const DirectedGraph g = fixtures::graph(name);
    const Classification cls = classify(g);
    const NoSinksResult r = no_sinks_fast_path(g, default_schedule(g, cls), 6);
    CAPTURE(name);
    CHECK(r.depth == 6);
    CHECK(r.passed());
    CHECK(r.max_residual() <= 1e-8);
    CHECK(r.recovered.size() == g.num_edges());
  }
  const DirectedGraph g2 = fixtures::graph("G2");
  CHECK_THROWS_AS(no_sinks_fast_path(g2, default_schedule(g2, classify(g2)), 6), InputError);
}

TEST_CASE("numerical building blocks") {
  SUBCASE("power limit of a contraction plus a fixed direction") {
    Matrix g = Matrix::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = 0.5;
    const PowerResult r = power_limit(g, 1.0, {});
    CHECK_FALSE(r.stalled);
    CHECK((r.limit - unit(2, 0, 0)).norm() < 1e-12);
  }
  SUBCASE("a tiny Jordan block stops at the rounding floor") {
    Matrix g = Matrix::Identity(2, 2);
    g(0, 1) = 1e-11;
    const PowerResult r = power_limit(g, 1.0, {});
    CHECK(r.stalled);
    CHECK((r.limit - Matrix::Identity(2, 2)).norm() < 1e-10);
  }
  SUBCASE("power limit outside the spectral radius diverges") {
    const Matrix g = 2.0 * Matrix::Identity(2, 2);
    CHECK_THROWS_AS(power_limit(g, 1.0, {}), ConvergenceError);
  }
  SUBCASE("Riesz projector") {
    Matrix g = Matrix::Zero(2, 2);
    g(1, 0) = 0.125;
    g(1, 1) = 0.75;
    CHECK((riesz_projector(g, 0.75, 1e-9) - (unit(2, 1, 1) + unit(2, 1, 0) / 6.0)).norm() < 1e-12);
    CHECK(riesz_projector(g, 0.3, 1e-9).isZero());
    Matrix jordan = Matrix::Zero(2, 2);
    jordan(0, 1) = 1.0;
    CHECK_THROWS_AS(riesz_projector(jordan, 0.0, 1e-9), InvariantError);
  }
  SUBCASE("repeated square roots") {
    Matrix x = Matrix::Zero(2, 2);
    x(0, 0) = 16.0;
    CHECK(kth_root(x, 2, 1e-12)(0, 0).real() == doctest::Approx(2.0));
    CHECK(std::abs(kth_root(x, 2, 1e-12)(1, 1)) == 0.0);
  }
}

TEST_CASE("report JSON") {
  const Case c = make(fixtures::graph("G6"));
  const ExtractionResult res = extract(c);
  const nlohmann::json j = res.report.to_json();
  CHECK(j.at("order") == "interior-first");
  CHECK(j.at("mode") == "power");
  CHECK(j.contains("stages"));
  std::size_t sink_edge_stages = 0;
  for (const StageRecord& s : res.report.stages) sink_edge_stages += s.stage == "sink_edge";
  CHECK(sink_edge_stages == 2);
}
