#include "ckgen/schedule.hpp"

#include <algorithm>
#include <limits>

#include "ckgen/error.hpp"

namespace ckgen {

const Rational& CoefficientSchedule::alpha_at(const Classification& cls, VertexId y,
                                               std::size_t n) const {
  const auto& edges = cls.boundary_edges_by_source.at(y);
  return alpha.at(edges.at(n - 1));
}

nlohmann::json rational_to_json(const Rational& q) {
  const mpz_class& num = q.get_num();
  const mpz_class& den = q.get_den();
  if (num.fits_slong_p() && den.fits_slong_p()) {
    return nlohmann::json::array({num.get_si(), den.get_si()});
  }
  return nlohmann::json::array({num.get_str(), den.get_str()});
}

Rational rational_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw InputError("rational must be a [numerator, denominator] pair");
  }
  auto part = [](const nlohmann::json& x) -> mpz_class {
    if (x.is_number_integer()) return mpz_class(x.get<long>());
    if (x.is_string()) return mpz_class(x.get<std::string>());
    throw InputError("rational parts must be integers");
  };
  mpz_class den = part(j[1]);
  if (den == 0) throw InputError("rational with zero denominator");
  Rational q(part(j[0]), den);
  q.canonicalize();
  return q;
}

CoefficientSchedule default_schedule(const DirectedGraph& graph, const Classification& cls) {
  CoefficientSchedule s;
  const std::size_t sinks = cls.sinks.size();
  for (std::size_t m = 0; m <= sinks + 1; ++m) s.delta.push_back(dyadic(m));

  s.gamma.resize(sinks);
  s.beta.resize(sinks);
  for (std::size_t m = 1; m <= sinks; ++m) {
    const Rational gap = s.delta[m - 1] - s.delta[m];
    for (std::size_t n = 1; n <= cls.sink_edges[m - 1].size(); ++n) {
      Rational g = s.delta[m] + gap * dyadic(n);
      s.beta[m - 1].push_back((g - s.delta[m]) / 2);
      s.gamma[m - 1].push_back(std::move(g));
    }
  }

  for (std::size_t l = 1; l <= cls.V.size(); ++l) {
    unsigned j = 0;
    for (EdgeId e = 0; e < graph.num_edges(); ++e) {
      if (cls.edge_class[e] != EdgeClass::BoundaryEdge) continue;
      if (cls.m_of.at(graph.rng(e)) != l) continue;
      ++j;
      s.alpha[e] = dyadic(static_cast<unsigned>(l + 1)) * dyadic(j);
    }
  }

  unsigned j = 0;
  for (EdgeId e : cls.interior_edges) s.epsilon[e] = dyadic(++j);
  return s;
}

bool ScheduleReport::violates(const std::string& constraint) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const ScheduleViolation& v) { return v.constraint == constraint; });
}

nlohmann::json ScheduleReport::to_json() const {
  nlohmann::json j;
  j["ok"] = ok();
  j["worst_power_ratio"] = worst_power_ratio;
  j["gamma_excess_sum"] = rational_to_json(gamma_excess_sum);
  j["violations"] = nlohmann::json::array();
  for (const auto& v : violations) {
    j["violations"].push_back(
        {{"constraint", v.constraint}, {"indices", v.indices}, {"message", v.message}});
  }
  return j;
}

namespace {

std::string mn(std::size_t m, std::size_t n) {
  return "(" + std::to_string(m) + "," + std::to_string(n) + ")";
}

void check_shape(const CoefficientSchedule& s, const DirectedGraph& graph,
                 const Classification& cls) {
  const std::size_t sinks = cls.sinks.size();
  if (s.delta.size() != sinks + 2) {
    throw InputError("schedule index mismatch: expected " + std::to_string(sinks + 2) +
                     " delta values (m = 0.." + std::to_string(sinks + 1) + "), got " +
                     std::to_string(s.delta.size()));
  }
  if (s.gamma.size() != sinks || s.beta.size() != sinks) {
    throw InputError("schedule index mismatch: gamma/beta must have one row per sink");
  }
  for (std::size_t m = 0; m < sinks; ++m) {
    const std::size_t k = cls.sink_edges[m].size();
    if (s.gamma[m].size() != k || s.beta[m].size() != k) {
      throw InputError("schedule index mismatch: sink " + graph.vertex_name(cls.sinks[m]) +
                       " has " + std::to_string(k) + " incoming edges");
    }
  }
  const auto boundary = cls.edges_of(EdgeClass::BoundaryEdge);
  if (s.alpha.size() != boundary.size() ||
      !std::all_of(boundary.begin(), boundary.end(),
                   [&](EdgeId e) { return s.alpha.count(e) != 0; })) {
    throw InputError("schedule index mismatch: alpha must cover exactly the boundary edges");
  }
  if (s.epsilon.size() != cls.interior_edges.size() ||
      !std::all_of(cls.interior_edges.begin(), cls.interior_edges.end(),
                   [&](EdgeId e) { return s.epsilon.count(e) != 0; })) {
    throw InputError("schedule index mismatch: epsilon must cover exactly the interior edges");
  }
}

}  // namespace

ScheduleReport validate_schedule(const CoefficientSchedule& s, const DirectedGraph& graph,
                                 const Classification& cls) {
  check_shape(s, graph, cls);
  ScheduleReport r;
  auto fail = [&](std::string c, std::string idx, std::string msg) {
    r.violations.push_back({std::move(c), std::move(idx), std::move(msg)});
  };

  const std::size_t sinks = cls.sinks.size();
  if (s.delta[0] != 1) fail("delta_0", "0", "delta_0 must equal 1");
  for (std::size_t m = 1; m < s.delta.size(); ++m) {
    if (sgn(s.delta[m]) <= 0 || s.delta[m] >= 1) {
      fail("delta_range", std::to_string(m),
           "delta_" + std::to_string(m) + " = " + to_string(s.delta[m]) + " not in (0,1)");
    }
    if (s.delta[m] >= s.delta[m - 1]) {
      fail("delta_decreasing", std::to_string(m),
           "delta_" + std::to_string(m) + " not strictly less than delta_" +
               std::to_string(m - 1));
    }
  }

  // Alpha budgets per level l (levels l = 1..#sinks; V_l is empty beyond).
  std::vector<Rational> level_sum(sinks + 2, Rational(0));
  for (const auto& [e, a] : s.alpha) {
    if (sgn(a) <= 0 || a >= 1) {
      fail("alpha_range", graph.edge_name(e), "alpha for " + graph.edge_name(e) + " not in (0,1)");
    }
    level_sum[cls.m_of.at(graph.rng(e))] += a;
  }
  for (std::size_t l = 1; l <= sinks; ++l) {
    const Rational budget = s.delta[l] - s.delta[l + 1];
    if (level_sum[l] > budget) {
      fail("alpha_level_budget", std::to_string(l),
           "sum of alpha into V_" + std::to_string(l) + " = " + to_string(level_sum[l]) +
               " exceeds delta_" + std::to_string(l) + " - delta_" + std::to_string(l + 1) +
               " = " + to_string(budget));
    }
  }
  for (std::size_t m = 1; m <= sinks + 1; ++m) {
    Rational tail = 0;
    for (std::size_t l = m; l <= sinks; ++l) tail += level_sum[l];
    if (tail > s.delta[m]) {
      fail("alpha_tail_bound", std::to_string(m),
           "sum over l >= " + std::to_string(m) + " of alpha = " + to_string(tail) +
               " exceeds delta_" + std::to_string(m));
    }
  }

  r.gamma_excess_sum = 0;
  double worst = 0.0;
  for (std::size_t m = 1; m <= sinks; ++m) {
    const auto& row = s.gamma[m - 1];
    for (std::size_t n = 1; n <= row.size(); ++n) {
      const Rational& g = row[n - 1];
      if (g <= s.delta[m]) {
        fail("gamma_interval", mn(m, n),
             "gamma_" + mn(m, n) + " not strictly greater than delta_" + std::to_string(m));
      }
      if (g >= s.delta[m - 1]) {
        fail("gamma_interval", mn(m, n),
             "gamma_" + mn(m, n) + " not strictly less than delta_" + std::to_string(m - 1));
      }
      if (n > 1 && g >= row[n - 2]) {
        fail("gamma_decreasing", mn(m, n),
             "gamma_" + mn(m, n) + " not strictly less than gamma_" + mn(m, n - 1));
      }
      if (s.beta[m - 1][n - 1] != (g - s.delta[m]) / 2) {
        fail("beta_formula", mn(m, n),
             "beta_" + mn(m, n) + " = " + to_string(s.beta[m - 1][n - 1]) +
                 " differs from (gamma - delta)/2 = " + to_string((g - s.delta[m]) / 2));
      }
      r.gamma_excess_sum += g - s.delta[m];

      if (sgn(g) > 0) {
        const Rational& next = n < row.size() ? row[n] : s.delta[m];
        worst = std::max(worst, to_double(next / g));
      }
    }
    if (sgn(s.delta[m]) > 0) {
      const Rational& next =
          m < sinks && !s.gamma[m].empty() ? s.gamma[m][0] : s.delta[m + 1];
      worst = std::max(worst, to_double(next / s.delta[m]));
    }
  }
  r.worst_power_ratio = worst;

  for (const auto& [e, eps] : s.epsilon) {
    if (sgn(eps) <= 0) {
      fail("epsilon_positive", graph.edge_name(e), "epsilon for " + graph.edge_name(e) + " not positive");
    }
  }
  return r;
}

nlohmann::json CoefficientSchedule::to_json(const DirectedGraph& graph,
                                            const Classification& cls) const {
  nlohmann::json j;
  j["schema"] = "ckgen-schedule/1";
  j["delta"] = nlohmann::json::array();
  for (const auto& d : delta) j["delta"].push_back(rational_to_json(d));
  j["gamma"] = nlohmann::json::array();
  j["beta"] = nlohmann::json::array();
  for (std::size_t m = 0; m < gamma.size(); ++m) {
    nlohmann::json gr = nlohmann::json::array(), br = nlohmann::json::array();
    for (const auto& g : gamma[m]) gr.push_back(rational_to_json(g));
    for (const auto& b : beta[m]) br.push_back(rational_to_json(b));
    j["gamma"].push_back(gr);
    j["beta"].push_back(br);
  }
  j["alpha"] = nlohmann::json::array();
  for (VertexId y : cls.Y) {
    const auto& edges = cls.boundary_edges_by_source.at(y);
    for (std::size_t n = 0; n < edges.size(); ++n) {
      j["alpha"].push_back({{"y", graph.vertex_name(y)},
                            {"n", n + 1},
                            {"edge", graph.edge_name(edges[n])},
                            {"value", rational_to_json(alpha.at(edges[n]))}});
    }
  }
  j["epsilon"] = nlohmann::json::object();
  for (const auto& [e, eps] : epsilon) j["epsilon"][graph.edge_name(e)] = rational_to_json(eps);
  return j;
}

CoefficientSchedule CoefficientSchedule::from_json(const nlohmann::json& j,
                                                   const DirectedGraph& graph,
                                                   const Classification& cls) {
  CoefficientSchedule s;
  try {
    for (const auto& d : j.at("delta")) s.delta.push_back(rational_from_json(d));
    for (const auto& row : j.at("gamma")) {
      s.gamma.emplace_back();
      for (const auto& g : row) s.gamma.back().push_back(rational_from_json(g));
    }
    for (const auto& row : j.at("beta")) {
      s.beta.emplace_back();
      for (const auto& b : row) s.beta.back().push_back(rational_from_json(b));
    }
    for (const auto& a : j.at("alpha")) {
      const VertexId y = graph.vertex(a.at("y").get<std::string>());
      const auto n = a.at("n").get<std::size_t>();
      auto it = cls.boundary_edges_by_source.find(y);
      if (it == cls.boundary_edges_by_source.end() || n == 0 || n > it->second.size()) {
        throw InputError("schedule index mismatch: no boundary edge e_{" +
                         graph.vertex_name(y) + "," + std::to_string(n) + "}");
      }
      s.alpha[it->second[n - 1]] = rational_from_json(a.at("value"));
    }
    for (const auto& [name, value] : j.at("epsilon").items()) {
      s.epsilon[graph.edge_by_name(name)] = rational_from_json(value);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed schedule: ") + e.what());
  }
  return s;
}

}  // namespace ckgen
