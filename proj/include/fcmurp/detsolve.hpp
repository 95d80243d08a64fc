#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fcmurp/model.hpp"

namespace fcmurp {

/// Deterministic first-stage problem: minimize travel cost subject to the
/// fuel constraints, optionally with substituted cost and/or fuel matrices.
class DetProblem {
 public:
  explicit DetProblem(const Instance& instance, std::optional<Matrix> cost_override = std::nullopt,
                      std::optional<Matrix> fuel_override = std::nullopt);

  [[nodiscard]] const Instance& instance() const { return *instance_; }
  [[nodiscard]] const Matrix& cost() const { return cost_ ? *cost_ : instance_->cost(); }
  [[nodiscard]] const Matrix& fuel() const { return fuel_ ? *fuel_ : instance_->nominal_fuel(); }
  [[nodiscard]] double min_fuel_to_depot(VertexId v) const { return to_depot_[v]; }
  /// Fuel matrix satisfies the triangle inequality; the arrival-fuel
  /// pruning rule is only applied when this holds.
  [[nodiscard]] bool fuel_metric() const { return fuel_metric_; }

 private:
  const Instance* instance_;
  std::optional<Matrix> cost_;
  std::optional<Matrix> fuel_;
  std::vector<double> to_depot_;
  bool fuel_metric_ = false;
};

struct BnBConfig {
  std::size_t node_limit = 20'000'000;
  double time_limit_seconds = 120.0;
  std::optional<RouteSet> initial_incumbent;
  /// Prune partial routes whose remaining fuel on arrival at a target cannot
  /// reach any depot.
  bool strengthened_pruning = true;
  /// Above this many targets, callers that accept heuristic subproblem
  /// solutions (construction heuristic) use the greedy solver instead.
  std::size_t exact_target_limit = 10;
};

struct InsertionResult {
  bool feasible = false;
  RouteSeq route;
  double cost = 0.0;
};

/// Minimum-cost placement of refuel-depot visits into a fixed target order
/// (home depot at both ends), at most one depot per target-target edge and
/// no depot adjacent to the home depot. Labels (fuel since last refuel,
/// cost) are kept Pareto-optimal per position; each label corresponds to a
/// (last refuel position, refuel depot) state of the full DP.
[[nodiscard]] InsertionResult optimal_depot_insertion(std::span<const VertexId> sequence, const DetProblem& problem);

struct DetSolution {
  bool feasible = false;
  RouteSet routes;
  double cost = 0.0;
  bool optimal = false;
  std::size_t nodes = 0;
};

/// Branch-and-bound over target assignment and order. Routes are built one at
/// a time, each new route starting with a target ranked after the previous
/// route's first target (targets ranked by decreasing distance from the home
/// depot, then id). Cost ties are broken by the canonical route order.
[[nodiscard]] DetSolution solve_deterministic_exact(const DetProblem& problem, const BnBConfig& config = {});

/// Angular sweep split into m groups, nearest-neighbour order, 2-opt, then
/// depot insertion; best over all sweep rotations.
[[nodiscard]] DetSolution solve_deterministic_greedy(const DetProblem& problem);

/// Exact when the instance is small enough (config.exact_target_limit),
/// greedy otherwise.
[[nodiscard]] DetSolution solve_deterministic(const DetProblem& problem, const BnBConfig& config = {});

/// A search node: finished routes plus the open route, all as target orders.
struct PartialSolution {
  std::vector<std::vector<VertexId>> closed;
  std::vector<VertexId> open;
};

/// Lower bound used to prune a node: optimal cost of the fixed part plus a
/// completion bound (cheapest remaining in-edges or out-edges, whichever is
/// larger). Infinity when the fixed part has no fuel-feasible insertion.
[[nodiscard]] double node_lower_bound(const DetProblem& problem, const PartialSolution& node);

/// Per-route cost of a route set under the problem's cost matrix after
/// re-running optimal_depot_insertion on each target order.
[[nodiscard]] std::optional<std::pair<RouteSet, double>> reinsert_depots(const RouteSet& routes,
                                                                        const DetProblem& problem);

}  // namespace fcmurp
