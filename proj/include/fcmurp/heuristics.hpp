#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "fcmurp/detsolve.hpp"
#include "fcmurp/model.hpp"
#include "fcmurp/recourse.hpp"

namespace fcmurp {

// ---------------------------------------------------------------------------
// Construction heuristic
// ---------------------------------------------------------------------------

struct ConstructionWeights {
  Matrix d;      // 1 - sum_w p(w) x^w_ij
  Matrix c_bar;  // c_ij * d_ij
  Matrix f_bar;  // sum_w p(w) f_ij(w)
};

/// Scenario processing order: decreasing probability, then scenario id.
[[nodiscard]] std::vector<std::size_t> scenario_order(const ScenarioSet& scenarios);

/// Weights from per-scenario deterministic solutions (slot s belongs to
/// scenario s; std::nullopt for a scenario with no feasible solution).
[[nodiscard]] ConstructionWeights construction_weights(const Instance& instance, const ScenarioSet& delta,
                                                       const std::vector<std::optional<RouteSet>>& per_scenario);

struct ConstructionResult {
  RouteSet routes;
  ConstructionWeights weights;
  std::vector<std::optional<RouteSet>> per_scenario;
  /// The final (c_bar, f_bar) solution needed new depot insertions to satisfy
  /// the nominal fuel constraints.
  bool repaired = false;
  /// The final problem failed and a per-scenario solution was returned.
  bool fallback = false;
};

/// Solves one deterministic problem per scenario of `delta` (in parallel),
/// folds them into construction weights and solves the transformed problem.
/// Throws std::runtime_error when no nominally feasible solution results.
[[nodiscard]] ConstructionResult construct(const Instance& instance, const ScenarioSet& delta,
                                           const BnBConfig& config = {});

// ---------------------------------------------------------------------------
// Tabu search
// ---------------------------------------------------------------------------

/// Unordered target pair identifying a swap move; a < b.
struct SwapKey {
  VertexId a = 0;
  VertexId b = 0;

  friend bool operator==(const SwapKey&, const SwapKey&) = default;
  friend auto operator<=>(const SwapKey&, const SwapKey&) = default;
};

[[nodiscard]] SwapKey make_swap_key(VertexId x, VertexId y);

struct Neighbor {
  RouteSet routes;
  SwapKey swap;
};

/// Every route set obtained by swapping the positions of two targets, with
/// depots of the affected routes re-optimized under nominal fuel. Neighbors
/// without a feasible depot insertion are dropped. Ordered by swap key.
[[nodiscard]] std::vector<Neighbor> neighborhood(const RouteSet& current, const Instance& instance);

/// Swaps two targets in place (depots untouched).
[[nodiscard]] RouteSet swap_targets(const RouteSet& routes, VertexId a, VertexId b);

class TabuList {
 public:
  void add(const SwapKey& key, std::size_t iteration, std::size_t tenure);
  /// Tabu for iterations inserted+1 .. inserted+tenure.
  [[nodiscard]] bool is_tabu(const SwapKey& key, std::size_t iteration) const;
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<SwapKey, std::size_t>> entries_;  // key, last tabu iteration
};

struct TabuParams {
  std::size_t theta = 500;
  std::size_t tau = 100;
  std::size_t tenure = 7;
  std::optional<PenaltyPolicy> penalty;

  /// theta 500, tau 100, tenure max(7, ceil(0.3 n)).
  [[nodiscard]] static TabuParams defaults(std::size_t n_targets);
  void validate() const;
};

struct TabuMove {
  std::size_t iteration = 0;
  std::optional<SwapKey> swap;  // empty when every neighbor was tabu
  bool was_tabu = false;
  bool aspiration = false;
  bool improving = false;
  bool feasible = false;
  double objective = 0.0;
  double best_objective = 0.0;
  bool best_updated = false;
  bool reset = false;
};

struct TabuResult {
  RouteSet best;
  ObjectiveValue best_objective;
  ObjectiveValue initial_objective;
  PenaltyPolicy penalty;
  std::vector<TabuMove> log;
  /// Initial solution was infeasible in some scenario and nothing feasible
  /// was found.
  bool warning = false;
};

[[nodiscard]] TabuResult tabu_improve(const RouteSet& initial, const ScenarioSet& delta, const TabuParams& params,
                                      const Instance& instance);

struct HeuristicResult {
  ConstructionResult construction;
  TabuResult tabu;
};

/// Construction followed by tabu search on the same scenario sample.
[[nodiscard]] HeuristicResult run_heuristic(const Instance& instance, const ScenarioSet& delta,
                                            const BnBConfig& config, const TabuParams& params);

}  // namespace fcmurp
