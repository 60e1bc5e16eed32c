#include "ckgen/closure.hpp"
#include "ckgen/error.hpp"
#include "ckgen/schedule.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace ckgen;

namespace {

Rational q(long n, long d = 1) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

Rational pow2(long k) {
  Rational r(1);
  for (long i = 0; i < k; ++i) r /= 2;
  return r;
}

}  // namespace

TEST_CASE("default values") {
  const DirectedGraph g = fixtures::graph("G6");
  const Classification c = classify(g);
  const CoefficientSchedule s = default_schedule(g, c);
  CHECK(s.delta_at(0) == q(1));
  CHECK(s.delta_at(1) == q(1, 2));
  CHECK(s.delta_at(2) == q(1, 4));
  CHECK(s.gamma_at(1, 1) == q(3, 4));
  CHECK(s.beta_at(1, 1) == q(1, 8));
  CHECK(s.gamma_at(2, 1) == q(3, 8));
  CHECK(s.beta_at(2, 1) == q(1, 16));
}

TEST_CASE("alpha and epsilon") {
  SUBCASE("G3: the single boundary edge into V_1") {
    const DirectedGraph g = fixtures::graph("G3");
    const Classification c = classify(g);
    const CoefficientSchedule s = default_schedule(g, c);
    CHECK(s.alpha.at(g.edge_by_name("i")) == q(1, 8));
    CHECK(s.alpha_at(c, g.vertex("u"), 1) == q(1, 8));
    CHECK(s.epsilon.empty());
  }
  SUBCASE("G4: the single interior edge") {
    const DirectedGraph g = fixtures::graph("G4");
    const Classification c = classify(g);
    const CoefficientSchedule s = default_schedule(g, c);
    CHECK(s.epsilon.at(g.edge_by_name("j")) == q(1, 2));
  }
}

TEST_CASE("default schedules match the closed-form formulas and validate") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    const DirectedGraph g = random_acyclic_graph(seed, 8, 14, 4);
    const Classification c = classify(g);
    const CoefficientSchedule s = default_schedule(g, c);
    CAPTURE(seed);
    for (std::size_t m = 1; m <= c.sinks.size(); ++m) {
      CHECK(s.delta_at(m) == pow2(static_cast<long>(m)));
      for (std::size_t n = 1; n <= c.sink_edges[m - 1].size(); ++n) {
        const Rational gamma = pow2(static_cast<long>(m)) +
                               (pow2(static_cast<long>(m) - 1) - pow2(static_cast<long>(m))) *
                                   pow2(static_cast<long>(n));
        CHECK(s.gamma_at(m, n) == gamma);
        CHECK(s.beta_at(m, n) == (gamma - pow2(static_cast<long>(m))) / 2);
      }
    }
    // alpha: per level l, the boundary edges entering V_l in file order get 2^-(l+1) 2^-j.
    for (std::size_t l = 1; l <= c.V.size(); ++l) {
      long j = 0;
      for (EdgeId e = 0; e < g.num_edges(); ++e) {
        if (c.edge_class[e] != EdgeClass::BoundaryEdge || c.m_of.at(g.rng(e)) != l) continue;
        ++j;
        CHECK(s.alpha.at(e) == pow2(static_cast<long>(l) + 1) * pow2(j));
      }
    }
    long j = 0;
    for (EdgeId e : c.interior_edges) CHECK(s.epsilon.at(e) == pow2(++j));

    const ScheduleReport r = validate_schedule(s, g, c);
    CHECK(r.ok());
    CHECK(r.gamma_excess_sum <= q(1));
    // The per-level budgets are only half used, so the tail bound is strict.
    for (std::size_t m = 1; m <= c.sinks.size(); ++m) {
      Rational tail(0);
      for (const auto& [e, a] : s.alpha) {
        if (c.m_of.at(g.rng(e)) >= m) tail += a;
      }
      CHECK(tail < s.delta_at(m));
    }
  }
}

TEST_CASE("violations are reported with their constraint") {
  const DirectedGraph g = fixtures::graph("G6");
  const Classification c = classify(g);
  const CoefficientSchedule good = default_schedule(g, c);
  REQUIRE(validate_schedule(good, g, c).ok());

  SUBCASE("gamma on the open interval's boundary") {
    CoefficientSchedule s = good;
    s.gamma[0][0] = s.delta_at(1);
    s.beta[0][0] = 0;
    const ScheduleReport r = validate_schedule(s, g, c);
    CHECK(r.violates("gamma_interval"));
  }
  SUBCASE("beta without the factor 1/2") {
    CoefficientSchedule s = good;
    s.beta[0][0] = s.gamma_at(1, 1) - s.delta_at(1);
    CHECK(validate_schedule(s, g, c).violates("beta_formula"));
  }
  SUBCASE("beta off by a factor 2 the other way") {
    CoefficientSchedule s = good;
    s.beta[1][0] = s.beta[1][0] / 2;
    CHECK(validate_schedule(s, g, c).violates("beta_formula"));
  }
  SUBCASE("delta not decreasing") {
    CoefficientSchedule s = good;
    s.delta[2] = s.delta[1];
    CHECK(validate_schedule(s, g, c).violates("delta_decreasing"));
  }
  SUBCASE("alpha budget exceeded") {
    CoefficientSchedule s = good;
    s.alpha.at(g.edge_by_name("i")) = q(1, 2);
    const ScheduleReport r = validate_schedule(s, g, c);
    CHECK_FALSE(r.ok());
    CHECK(r.violates("alpha_level_budget"));
  }
  SUBCASE("mismatched index sets") {
    CoefficientSchedule s = good;
    s.gamma[0].push_back(q(5, 8));
    CHECK_THROWS_AS(validate_schedule(s, g, c), InputError);
  }
}

TEST_CASE("power ratio diagnostic") {
  const DirectedGraph g = fixtures::graph("G6");
  const Classification c = classify(g);
  const ScheduleReport r = validate_schedule(default_schedule(g, c), g, c);
  // gamma_{1,1} = 3/4 -> delta_1 = 1/2 gives 2/3; gamma_{2,1}/delta_1 = 3/4;
  // gamma_{2,1} = 3/8 -> delta_2 = 1/4 gives 2/3. The worst is 3/4.
  CHECK(r.worst_power_ratio == doctest::Approx(0.75));
}

TEST_CASE("JSON round trip is exact") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const DirectedGraph g = random_acyclic_graph(seed, 8, 14, 4);
    const Classification c = classify(g);
    const CoefficientSchedule s = default_schedule(g, c);
    const CoefficientSchedule t = CoefficientSchedule::from_json(s.to_json(g, c), g, c);
    CHECK(t.delta == s.delta);
    CHECK(t.gamma == s.gamma);
    CHECK(t.beta == s.beta);
    CHECK(t.alpha == s.alpha);
    CHECK(t.epsilon == s.epsilon);
  }
  CHECK(rational_from_json(rational_to_json(q(-7, 12))) == q(-7, 12));
}
