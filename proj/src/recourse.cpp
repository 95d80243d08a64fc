#include "fcmurp/recourse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fcmurp/parallel.hpp"

namespace fcmurp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dimensions(const Instance& instance, const Matrix& fuel, const BestDepotTable& table) {
  if (fuel.size() != instance.vertex_count() || table.size() != instance.vertex_count()) {
    throw StructuralError("scenario edge set does not match the instance");
  }
}

bool is_candidate_edge(const RouteSeq& r, std::size_t p, const Instance& instance) {
  return instance.is_target(r[p]) && instance.is_target(r[p + 1]);
}
}  // namespace

BestDepotTable precompute_best_depot(const Instance& instance, const Scenario& scenario) {
  const std::size_t n = instance.vertex_count();
  if (scenario.fuel.size() != n) throw StructuralError("scenario edge set does not match the instance");
  std::vector<VertexId> depots = instance.depots();
  std::sort(depots.begin(), depots.end());
  std::vector<VertexId> best(n * n, depots.front());
  std::vector<double> value(n * n, kInf);
  for (VertexId i = 0; i < n; ++i) {
    for (VertexId j = 0; j < n; ++j) {
      if (i == j) continue;
      for (VertexId d : depots) {
        if (d == i || d == j) continue;
        const double v = scenario.fuel(i, d) + scenario.fuel(d, j);
        if (v < value[i * n + j]) {
          value[i * n + j] = v;
          best[i * n + j] = d;
        }
      }
    }
  }
  return {n, std::move(best), std::move(value)};
}

std::vector<BestDepotTable> precompute_best_depots(const Instance& instance, const ScenarioSet& scenarios) {
  std::vector<BestDepotTable> tables(scenarios.size());
  parallel_for(scenarios.size(),
               [&](std::size_t s) { tables[s] = precompute_best_depot(instance, scenarios.scenarios[s]); });
  return tables;
}

double detour_cost(const Instance& instance, VertexId i, VertexId d, VertexId j) {
  return (instance.cost(i, d) + instance.cost(d, j)) - instance.cost(i, j);
}

RouteRecourse evaluate_route_recourse(const RouteSeq& r, const Matrix& fuel, const BestDepotTable& table,
                                      const Instance& instance) {
  check_dimensions(instance, fuel, table);
  const double cap = instance.fuel_capacity() + kTolerance;
  RouteRecourse out;

  // Blocks run between consecutive first-stage depot visits; fuel resets at
  // both ends so blocks are independent.
  std::size_t a = 0;
  while (a + 1 < r.size()) {
    std::size_t b = a + 1;
    while (!instance.is_depot(r[b])) ++b;

    // Events: index 0 = block start, index k (1..) = detour on candidate
    // edge cand[k-1]. Each event fixes where fuel restarts.
    std::vector<std::size_t> cand;
    for (std::size_t p = a; p < b; ++p) {
      if (is_candidate_edge(r, p, instance)) cand.push_back(p);
    }
    const std::size_t events = cand.size() + 1;
    auto start_pos = [&](std::size_t e) { return e == 0 ? a : cand[e - 1] + 1; };
    auto start_fuel = [&](std::size_t e) {
      if (e == 0) return 0.0;
      const std::size_t p = cand[e - 1];
      return fuel(table.depot(r[p], r[p + 1]), r[p + 1]);
    };
    std::vector<double> step_cost(events, 0.0);
    for (std::size_t e = 1; e < events; ++e) {
      const std::size_t p = cand[e - 1];
      step_cost[e] = detour_cost(instance, r[p], table.depot(r[p], r[p + 1]), r[p + 1]);
    }

    // Segment feasibility from event e to a later event (or block end).
    // Sums run left to right so they match a direct simulation bit for bit.
    auto segment_ok = [&](std::size_t e, std::size_t next) {
      double used = start_fuel(e);
      const std::size_t s = start_pos(e);
      const std::size_t stop = next == events ? b : cand[next - 1];
      for (std::size_t q = s; q < stop; ++q) used += fuel(r[q], r[q + 1]);
      if (next != events) {
        const std::size_t p = cand[next - 1];
        used += fuel(r[p], table.depot(r[p], r[p + 1]));
      }
      return used <= cap;
    };

    // Backward cost-to-go over events.
    std::vector<double> to_go(events, kInf);
    for (std::size_t e = events; e-- > 0;) {
      if (segment_ok(e, events)) to_go[e] = 0.0;
      for (std::size_t nx = e + 1; nx < events; ++nx) {
        if (to_go[nx] == kInf || !segment_ok(e, nx)) continue;
        to_go[e] = std::min(to_go[e], step_cost[nx] + to_go[nx]);
      }
    }
    if (to_go[0] == kInf) {
      out.feasible = false;
      out.detours.clear();
      out.beta = 0.0;
      return out;
    }

    // Forward reconstruction of the lexicographically smallest optimal set:
    // stop as early as possible, otherwise take the earliest optimal detour.
    std::size_t e = 0;
    for (;;) {
      const double target = to_go[e];
      if (segment_ok(e, events) && std::abs(target) <= kTieTolerance) break;
      std::size_t chosen = events;
      for (std::size_t nx = e + 1; nx < events; ++nx) {
        if (to_go[nx] == kInf || !segment_ok(e, nx)) continue;
        if (std::abs(step_cost[nx] + to_go[nx] - target) <= kTieTolerance) {
          chosen = nx;
          break;
        }
      }
      if (chosen == events) break;  // only reachable through rounding; end is then the optimum
      const std::size_t p = cand[chosen - 1];
      out.detours.push_back({0, p, table.depot(r[p], r[p + 1]), step_cost[chosen]});
      e = chosen;
    }
    a = b;
  }
  for (const auto& d : out.detours) out.beta += d.cost;
  return out;
}

RecoursePlan evaluate_recourse(const RouteSet& routes, const Scenario& scenario, const BestDepotTable& table,
                               const Instance& instance) {
  RecoursePlan plan;
  plan.scenario_id = scenario.id;
  for (std::size_t k = 0; k < routes.routes.size(); ++k) {
    auto rr = evaluate_route_recourse(routes.routes[k], scenario.fuel, table, instance);
    if (!rr.feasible) {
      plan.feasible = false;
      plan.detours.clear();
      plan.beta = 0.0;
      return plan;
    }
    for (auto d : rr.detours) {
      d.route = k;
      plan.detours.push_back(d);
    }
  }
  for (const auto& d : plan.detours) plan.beta += d.cost;
  return plan;
}

RecoursePlan recourse_oracle(const RouteSet& routes, const Scenario& scenario, const BestDepotTable& table,
                             const Instance& instance) {
  check_dimensions(instance, scenario.fuel, table);
  std::size_t total_edges = 0;
  for (const auto& r : routes.routes) total_edges += r.size() - 1;
  if (total_edges > kOracleEdgeCap) throw std::length_error("recourse oracle: too many route edges");

  const double cap = instance.fuel_capacity() + kTolerance;
  RecoursePlan plan;
  plan.scenario_id = scenario.id;
  for (std::size_t k = 0; k < routes.routes.size(); ++k) {
    const RouteSeq& r = routes.routes[k];
    const std::size_t edges = r.size() - 1;
    bool found = false;
    double best_cost = kInf;
    std::vector<std::size_t> best_set;
    for (std::uint32_t mask = 0; mask < (1U << edges); ++mask) {
      std::vector<std::size_t> set;
      bool allowed = true;
      for (std::size_t p = 0; p < edges; ++p) {
        if (!(mask & (1U << p))) continue;
        if (!is_candidate_edge(r, p, instance)) allowed = false;
        set.push_back(p);
      }
      if (!allowed) continue;

      // Direct simulation of the realized route.
      double used = 0.0;
      bool ok = true;
      for (std::size_t p = 0; p < edges && ok; ++p) {
        if (mask & (1U << p)) {
          const VertexId d = table.depot(r[p], r[p + 1]);
          used += scenario.fuel(r[p], d);
          if (used > cap) ok = false;
          used = scenario.fuel(d, r[p + 1]);
        } else {
          used += scenario.fuel(r[p], r[p + 1]);
        }
        if (used > cap) ok = false;
        if (instance.is_depot(r[p + 1])) used = 0.0;
      }
      if (!ok) continue;

      double c = 0.0;
      for (std::size_t p : set) c += detour_cost(instance, r[p], table.depot(r[p], r[p + 1]), r[p + 1]);
      const bool better = !found || c < best_cost - kTieTolerance ||
                          (std::abs(c - best_cost) <= kTieTolerance && set < best_set);
      if (better) {
        found = true;
        best_cost = c;
        best_set = set;
      }
    }
    if (!found) {
      plan.feasible = false;
      plan.detours.clear();
      plan.beta = 0.0;
      return plan;
    }
    for (std::size_t p : best_set) {
      const VertexId d = table.depot(r[p], r[p + 1]);
      plan.detours.push_back({k, p, d, detour_cost(instance, r[p], d, r[p + 1])});
    }
  }
  for (const auto& d : plan.detours) plan.beta += d.cost;
  return plan;
}

RouteSet apply_plan(const RouteSet& routes, const RecoursePlan& plan) {
  RouteSet out;
  for (std::size_t k = 0; k < routes.routes.size(); ++k) {
    const RouteSeq& r = routes.routes[k];
    RouteSeq realized;
    for (std::size_t p = 0; p < r.size(); ++p) {
      realized.push_back(r[p]);
      for (const auto& d : plan.detours) {
        if (d.route == k && d.edge == p) realized.push_back(d.depot);
      }
    }
    out.routes.push_back(std::move(realized));
  }
  return out;
}

std::vector<RecoursePlan> evaluate_all(const RouteSet& routes, const ScenarioSet& scenarios,
                                       const std::vector<BestDepotTable>& tables, const Instance& instance) {
  if (tables.size() != scenarios.size()) throw StructuralError("one best-depot table per scenario is required");
  std::vector<RecoursePlan> plans(scenarios.size());
  parallel_for(scenarios.size(), [&](std::size_t s) {
    plans[s] = evaluate_recourse(routes, scenarios.scenarios[s], tables[s], instance);
  });
  return plans;
}

PenaltyPolicy make_penalty(const Instance& instance, double max_feasible_beta) {
  double tour_bound = 0.0;
  for (VertexId t : instance.targets()) {
    tour_bound += instance.cost(instance.home_depot(), t) + instance.cost(t, instance.home_depot());
  }
  return {std::max(0.0, max_feasible_beta) + 2.0 * tour_bound, "max feasible beta + 2 * sum_t (c(d0,t) + c(t,d0))"};
}

ObjectiveValue penalized_objective(const RouteSet& routes, const ScenarioSet& scenarios,
                                   const std::vector<BestDepotTable>& tables, const Instance& instance,
                                   const PenaltyPolicy& policy) {
  ObjectiveValue out;
  out.route_cost = route_cost(routes, instance);
  if (tables.size() != scenarios.size()) throw StructuralError("one best-depot table per scenario is required");
  // Sequential: callers parallelize over candidate route sets.
  double recourse = 0.0;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const double p = scenarios.scenarios[s].probability;
    const auto plan = evaluate_recourse(routes, scenarios.scenarios[s], tables[s], instance);
    if (plan.feasible) {
      recourse += p * plan.beta;
      out.expected_beta += p * plan.beta;
      out.max_beta = std::max(out.max_beta, plan.beta);
    } else {
      recourse += p * policy.nu;
      ++out.infeasible;
    }
  }
  out.value = out.route_cost + recourse;
  return out;
}

ObjectiveValue penalized_objective(const RouteSet& routes, const ScenarioSet& scenarios, const Instance& instance,
                                   const PenaltyPolicy& policy) {
  return penalized_objective(routes, scenarios, precompute_best_depots(instance, scenarios), instance, policy);
}

}  // namespace fcmurp
