#pragma once

#include <map>
#include <string>
#include <vector>

#include "ckgen/graph.hpp"
#include "ckgen/rational.hpp"
#include "json.hpp"

namespace ckgen {

/// Coefficients delta_m, alpha_{y,n}, gamma_{m,n}, beta_{m,n}, epsilon_e of
/// the generator. All values are exact rationals.
struct CoefficientSchedule {
  /// delta[m] for m = 0 .. #sinks + 1; delta[0] = 1.
  std::vector<Rational> delta;
  /// gamma[m-1][n-1] = gamma_{m,n}; one row per sink, one entry per sink edge.
  std::vector<std::vector<Rational>> gamma;
  std::vector<std::vector<Rational>> beta;
  /// Keyed by the boundary edge e_{y,n}.
  std::map<EdgeId, Rational> alpha;
  /// Keyed by interior edge.
  std::map<EdgeId, Rational> epsilon;

  const Rational& delta_at(std::size_t m) const { return delta.at(m); }
  const Rational& gamma_at(std::size_t m, std::size_t n) const { return gamma.at(m - 1).at(n - 1); }
  const Rational& beta_at(std::size_t m, std::size_t n) const { return beta.at(m - 1).at(n - 1); }
  /// alpha_{y,n} (n is 1-based).
  const Rational& alpha_at(const Classification& cls, VertexId y, std::size_t n) const;

  nlohmann::json to_json(const DirectedGraph& graph, const Classification& cls) const;
  static CoefficientSchedule from_json(const nlohmann::json& j, const DirectedGraph& graph,
                                       const Classification& cls);
};

/// delta_m = 2^-m, gamma_{m,n} = delta_m + (delta_{m-1} - delta_m) 2^-n,
/// beta = (gamma - delta)/2, alpha = 2^-(l+1) 2^-j over the boundary edges
/// entering V_l, epsilon = 2^-j over the interior edges.
CoefficientSchedule default_schedule(const DirectedGraph& graph, const Classification& cls);

struct ScheduleViolation {
  std::string constraint;
  std::string indices;
  std::string message;
};

struct ScheduleReport {
  std::vector<ScheduleViolation> violations;
  /// Largest contraction ratio any extraction power iteration will face.
  double worst_power_ratio = 0.0;
  /// Sum over (m,n) of gamma_{m,n} - delta_m.
  Rational gamma_excess_sum;

  bool ok() const { return violations.empty(); }
  bool violates(const std::string& constraint) const;
  nlohmann::json to_json() const;
};

/// Checks every constraint exactly. Throws InputError when the schedule's
/// index sets do not match the classification's enumerations.
ScheduleReport validate_schedule(const CoefficientSchedule& schedule, const DirectedGraph& graph,
                                 const Classification& cls);

nlohmann::json rational_to_json(const Rational& q);
Rational rational_from_json(const nlohmann::json& j);

}  // namespace ckgen
