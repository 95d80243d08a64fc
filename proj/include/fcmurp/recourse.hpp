#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fcmurp/model.hpp"

namespace fcmurp {

/// For every ordered pair (i, j): the depot d minimizing f(i,d) + f(d,j)
/// under one scenario, ties going to the smaller depot id.
class BestDepotTable {
 public:
  BestDepotTable() = default;
  BestDepotTable(std::size_t n, std::vector<VertexId> depot, std::vector<double> value)
      : n_(n), depot_(std::move(depot)), value_(std::move(value)) {}

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] VertexId depot(VertexId i, VertexId j) const { return depot_[i * n_ + j]; }
  [[nodiscard]] double value(VertexId i, VertexId j) const { return value_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<VertexId> depot_;
  std::vector<double> value_;
};

[[nodiscard]] BestDepotTable precompute_best_depot(const Instance& instance, const Scenario& scenario);
[[nodiscard]] std::vector<BestDepotTable> precompute_best_depots(const Instance& instance,
                                                                 const ScenarioSet& scenarios);

/// One second-stage refuel detour: edge `edge` of route `route` is replaced
/// by v[edge] -> depot -> v[edge + 1].
struct Detour {
  std::size_t route = 0;
  std::size_t edge = 0;
  VertexId depot = 0;
  double cost = 0.0;

  friend bool operator==(const Detour&, const Detour&) = default;
};

struct RecoursePlan {
  std::size_t scenario_id = 0;
  std::vector<Detour> detours;  // ordered by (route, edge)
  double beta = 0.0;
  bool feasible = true;
};

/// Detour cost (c(i,d) + c(d,j)) - c(i,j), evaluated in exactly this order.
[[nodiscard]] double detour_cost(const Instance& instance, VertexId i, VertexId d, VertexId j);

/// Exact minimum-cost refuel recourse for a fixed first-stage route set.
/// Each depot-to-depot block of a route is solved independently by a
/// shortest path over refuel events (block start, detour on edge p, block
/// end), O(L^2) per route. Among cost-tied optima the lexicographically
/// smallest detour position set is returned; beta is accumulated left to
/// right along the routes.
[[nodiscard]] RecoursePlan evaluate_recourse(const RouteSet& routes, const Scenario& scenario,
                                             const BestDepotTable& table, const Instance& instance);

/// Brute-force reference: enumerates every keep/detour subset of every
/// route. Refuses (std::length_error) above kOracleEdgeCap route edges.
inline constexpr std::size_t kOracleEdgeCap = 20;
[[nodiscard]] RecoursePlan recourse_oracle(const RouteSet& routes, const Scenario& scenario,
                                           const BestDepotTable& table, const Instance& instance);

/// Route-level recourse for one route (used by the SAA search).
struct RouteRecourse {
  bool feasible = true;
  double beta = 0.0;
  std::vector<Detour> detours;  // route index 0
};
[[nodiscard]] RouteRecourse evaluate_route_recourse(const RouteSeq& route, const Matrix& fuel,
                                                    const BestDepotTable& table, const Instance& instance);

/// Realized second-stage routes: the first-stage routes with the plan's
/// detour depots spliced in.
[[nodiscard]] RouteSet apply_plan(const RouteSet& routes, const RecoursePlan& plan);

/// Plans for every scenario, in scenario order (evaluated in parallel).
[[nodiscard]] std::vector<RecoursePlan> evaluate_all(const RouteSet& routes, const ScenarioSet& scenarios,
                                                     const std::vector<BestDepotTable>& tables,
                                                     const Instance& instance);

struct PenaltyPolicy {
  double nu = 0.0;
  std::string rule;
};

/// nu = max feasible beta + 2 * sum over targets of (c(d0,t) + c(t,d0)).
[[nodiscard]] PenaltyPolicy make_penalty(const Instance& instance, double max_feasible_beta);

struct ObjectiveValue {
  double value = 0.0;
  double route_cost = 0.0;
  double expected_beta = 0.0;  // over feasible scenarios, probability weighted
  std::size_t infeasible = 0;
  double max_beta = 0.0;

  [[nodiscard]] bool all_feasible() const { return infeasible == 0; }
};

/// C(x) = route cost + sum_{feasible} p * beta + sum_{infeasible} p * nu.
[[nodiscard]] ObjectiveValue penalized_objective(const RouteSet& routes, const ScenarioSet& scenarios,
                                                 const Instance& instance, const PenaltyPolicy& policy);
[[nodiscard]] ObjectiveValue penalized_objective(const RouteSet& routes, const ScenarioSet& scenarios,
                                                 const std::vector<BestDepotTable>& tables,
                                                 const Instance& instance, const PenaltyPolicy& policy);

}  // namespace fcmurp
