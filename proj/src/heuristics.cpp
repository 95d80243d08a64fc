#include "fcmurp/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fcmurp/parallel.hpp"

namespace fcmurp {

std::vector<std::size_t> scenario_order(const ScenarioSet& scenarios) {
  std::vector<std::size_t> order(scenarios.size());
  for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = scenarios.scenarios[a];
    const auto& sb = scenarios.scenarios[b];
    if (sa.probability != sb.probability) return sa.probability > sb.probability;
    return sa.id < sb.id;
  });
  return order;
}

ConstructionWeights construction_weights(const Instance& instance, const ScenarioSet& delta,
                                         const std::vector<std::optional<RouteSet>>& per_scenario) {
  const std::size_t n = instance.vertex_count();
  if (per_scenario.size() != delta.size()) throw StructuralError("one solution slot per scenario is required");
  ConstructionWeights w{Matrix(n, 1.0), Matrix(n, 0.0), Matrix(n, 0.0)};
  for (std::size_t s : scenario_order(delta)) {
    const auto& sc = delta.scenarios[s];
    if (per_scenario[s]) {
      const auto x = edge_indicator(*per_scenario[s], n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (x[i * n + j]) w.d(i, j) -= sc.probability;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) w.f_bar(i, j) += sc.probability * sc.fuel(i, j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        w.d(i, j) = 0.0;
        continue;
      }
      // Rounding can push an always-used edge a hair below zero.
      w.d(i, j) = std::clamp(w.d(i, j), 0.0, 1.0);
      w.c_bar(i, j) = instance.cost(i, j) * w.d(i, j);
    }
  }
  return w;
}

namespace {

/// The route set itself when nominally feasible, else the same target orders
/// with depots re-inserted under nominal fuel and true costs.
std::optional<RouteSet> nominal_repair(const RouteSet& routes, const Instance& instance, bool& repaired) {
  repaired = false;
  if (nominal_feasibility(routes, instance).feasible) return routes;
  auto re = reinsert_depots(routes, DetProblem(instance));
  if (!re) return std::nullopt;
  repaired = true;
  return canonical(re->first);
}

}  // namespace

ConstructionResult construct(const Instance& instance, const ScenarioSet& delta, const BnBConfig& config) {
  if (delta.empty()) throw std::invalid_argument("construction needs at least one scenario");
  ConstructionResult out;
  out.per_scenario.resize(delta.size());
  const auto order = scenario_order(delta);
  parallel_for(order.size(), [&](std::size_t k) {
    const std::size_t s = order[k];
    DetProblem pb(instance, std::nullopt, delta.scenarios[s].fuel);
    auto sol = solve_deterministic(pb, config);
    if (sol.feasible) out.per_scenario[s] = sol.routes;
  });

  out.weights = construction_weights(instance, delta, out.per_scenario);
  DetProblem final_problem(instance, out.weights.c_bar, out.weights.f_bar);
  auto final_sol = solve_deterministic(final_problem, config);
  if (final_sol.feasible) {
    bool repaired = false;
    if (auto rs = nominal_repair(final_sol.routes, instance, repaired)) {
      out.routes = *rs;
      out.repaired = repaired;
      return out;
    }
  }

  // Fallback: best per-scenario solution under the penalized objective.
  std::vector<RouteSet> pool;
  for (const auto& sol : out.per_scenario) {
    if (!sol) continue;
    bool repaired = false;
    if (auto rs = nominal_repair(*sol, instance, repaired)) pool.push_back(*rs);
  }
  if (pool.empty()) throw std::runtime_error("construction heuristic found no nominally feasible solution");
  const auto tables = precompute_best_depots(instance, delta);
  double max_beta = 0.0;
  for (const auto& rs : pool) {
    max_beta = std::max(max_beta, penalized_objective(rs, delta, tables, instance, {0.0, ""}).max_beta);
  }
  const auto policy = make_penalty(instance, max_beta);
  std::size_t best = 0;
  double best_value = 0.0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const double v = penalized_objective(pool[k], delta, tables, instance, policy).value;
    if (k == 0 || better_solution(v, pool[k], best_value, pool[best])) {
      best = k;
      best_value = v;
    }
  }
  out.routes = pool[best];
  out.fallback = true;
  return out;
}

SwapKey make_swap_key(VertexId x, VertexId y) { return x < y ? SwapKey{x, y} : SwapKey{y, x}; }

RouteSet swap_targets(const RouteSet& routes, VertexId a, VertexId b) {
  RouteSet out = routes;
  for (auto& r : out.routes) {
    for (auto& v : r) {
      if (v == a) {
        v = b;
      } else if (v == b) {
        v = a;
      }
    }
  }
  return out;
}

std::vector<Neighbor> neighborhood(const RouteSet& current, const Instance& instance) {
  const DetProblem nominal(instance);
  std::vector<VertexId> targets = instance.targets();
  std::sort(targets.begin(), targets.end());
  std::vector<std::size_t> route_of(instance.vertex_count(), 0);
  for (std::size_t k = 0; k < current.routes.size(); ++k) {
    for (VertexId v : current.routes[k]) {
      if (instance.is_target(v)) route_of[v] = k;
    }
  }
  std::vector<Neighbor> out;
  for (std::size_t x = 0; x < targets.size(); ++x) {
    for (std::size_t y = x + 1; y < targets.size(); ++y) {
      const VertexId a = targets[x];
      const VertexId b = targets[y];
      RouteSet swapped = swap_targets(current, a, b);
      bool ok = true;
      for (std::size_t k : {route_of[a], route_of[b]}) {
        auto ins = optimal_depot_insertion(targets_of(swapped.routes[k], instance), nominal);
        if (!ins.feasible) {
          ok = false;
          break;
        }
        swapped.routes[k] = std::move(ins.route);
      }
      if (ok) out.push_back({std::move(swapped), {a, b}});
    }
  }
  return out;
}

void TabuList::add(const SwapKey& key, std::size_t iteration, std::size_t tenure) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = iteration + tenure;
      return;
    }
  }
  entries_.emplace_back(key, iteration + tenure);
}

bool TabuList::is_tabu(const SwapKey& key, std::size_t iteration) const {
  for (const auto& e : entries_) {
    if (e.first == key) return iteration <= e.second;
  }
  return false;
}

TabuParams TabuParams::defaults(std::size_t n_targets) {
  TabuParams p;
  p.tenure = std::max<std::size_t>(7, static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(n_targets))));
  return p;
}

void TabuParams::validate() const {
  if (theta < 1) throw std::invalid_argument("theta must be at least 1");
  // A single-iteration run has no room for a stall limit below theta.
  if (tau < 1 || (tau >= theta && !(theta == 1 && tau == 1))) {
    throw std::invalid_argument("tau must satisfy 1 <= tau < theta");
  }
  if (tenure < 1) throw std::invalid_argument("tenure must be at least 1");
}

TabuResult tabu_improve(const RouteSet& initial, const ScenarioSet& delta, const TabuParams& params,
                        const Instance& instance) {
  params.validate();
  check_structure(initial, instance);
  const auto tables = precompute_best_depots(instance, delta);

  TabuResult result;
  if (params.penalty) {
    result.penalty = *params.penalty;
  } else {
    const auto probe = penalized_objective(initial, delta, tables, instance, {0.0, ""});
    result.penalty = make_penalty(instance, probe.max_beta);
  }

  std::map<std::vector<RouteSeq>, ObjectiveValue> cache;
  auto evaluate = [&](const RouteSet& rs) {
    auto key = canonical(rs).routes;
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    auto v = penalized_objective(rs, delta, tables, instance, result.penalty);
    cache.emplace(std::move(key), v);
    return v;
  };

  RouteSet current = initial;
  ObjectiveValue current_obj = evaluate(current);
  result.initial_objective = current_obj;
  result.best = initial;
  result.best_objective = current_obj;
  bool best_feasible_found = false;
  std::size_t last_update = 0;
  std::size_t last_reset = 0;
  TabuList tabu;

  for (std::size_t k = 1; k <= params.theta; ++k) {
    auto neighbors = neighborhood(current, instance);

    // Evaluate uncached neighbors in parallel, then fold into the cache.
    std::vector<std::vector<RouteSeq>> keys(neighbors.size());
    std::vector<std::size_t> missing;
    for (std::size_t q = 0; q < neighbors.size(); ++q) {
      keys[q] = canonical(neighbors[q].routes).routes;
      if (!cache.contains(keys[q])) missing.push_back(q);
    }
    std::vector<ObjectiveValue> fresh(missing.size());
    parallel_for(missing.size(), [&](std::size_t t) {
      fresh[t] = penalized_objective(neighbors[missing[t]].routes, delta, tables, instance, result.penalty);
    });
    for (std::size_t t = 0; t < missing.size(); ++t) cache.emplace(keys[missing[t]], fresh[t]);
    std::vector<ObjectiveValue> values(neighbors.size());
    for (std::size_t q = 0; q < neighbors.size(); ++q) values[q] = cache.at(keys[q]);

    TabuMove move;
    move.iteration = k;
    std::optional<std::size_t> chosen;
    for (std::size_t q = 0; q < neighbors.size(); ++q) {
      const bool is_tabu = tabu.is_tabu(neighbors[q].swap, k);
      const bool aspires = values[q].value < result.best_objective.value;
      if (values[q].value >= current_obj.value) continue;
      if (is_tabu && !aspires) continue;
      if (!chosen || values[q].value < values[*chosen].value) chosen = q;
    }
    if (chosen) {
      move.improving = true;
    } else {
      for (std::size_t q = 0; q < neighbors.size(); ++q) {
        const bool aspires = values[q].value < result.best_objective.value;
        if (tabu.is_tabu(neighbors[q].swap, k) && !aspires) continue;
        if (!chosen || values[q].value < values[*chosen].value) chosen = q;
      }
    }

    std::optional<RouteSet> next;
    ObjectiveValue next_obj;
    if (chosen) {
      const auto& nb = neighbors[*chosen];
      move.swap = nb.swap;
      move.was_tabu = tabu.is_tabu(nb.swap, k);
      move.aspiration = move.was_tabu;
      move.objective = values[*chosen].value;
      move.feasible = values[*chosen].all_feasible();
      next = nb.routes;
      next_obj = values[*chosen];
      if (move.feasible && next_obj.value < result.best_objective.value) {
        result.best = nb.routes;
        result.best_objective = next_obj;
        best_feasible_found = true;
        last_update = k;
        move.best_updated = true;
      }
    }

    const std::size_t stagnant = k - last_update;
    // Reset window restarts after each reset, else every later iteration resets.
    const auto reset_after = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));
    if (k - std::max(last_update, last_reset) >= reset_after) {
      current = result.best;
      current_obj = result.best_objective;
      move.reset = true;
      last_reset = k;
    } else if (next) {
      current = *next;
      current_obj = next_obj;
    }
    if (move.swap) tabu.add(*move.swap, k, params.tenure);
    move.best_objective = result.best_objective.value;
    result.log.push_back(move);
    if (stagnant >= params.tau) break;
  }
  result.warning = !result.initial_objective.all_feasible() && !best_feasible_found;
  return result;
}

HeuristicResult run_heuristic(const Instance& instance, const ScenarioSet& delta, const BnBConfig& config,
                              const TabuParams& params) {
  HeuristicResult out;
  out.construction = construct(instance, delta, config);
  out.tabu = tabu_improve(out.construction.routes, delta, params, instance);
  return out;
}

}  // namespace fcmurp
