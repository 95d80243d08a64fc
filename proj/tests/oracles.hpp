#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They share no search code with the library: placements, fuel
// simulation and tie-breaks are re-implemented here from the definitions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "fcmurp/heuristics.hpp"
#include "fcmurp/instgen.hpp"
#include "fcmurp/model.hpp"
#include "fcmurp/recourse.hpp"

namespace oracle {

using fcmurp::Instance;
using fcmurp::Matrix;
using fcmurp::RouteSeq;
using fcmurp::RouteSet;
using fcmurp::VertexId;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kSlack = 1e-6;
inline constexpr double kTie = 1e-9;

/// Every segment between depot visits burns at most F (+slack).
inline bool segments_fit(const RouteSeq& r, const Instance& inst, const Matrix& fuel) {
  double used = 0.0;
  for (std::size_t p = 0; p + 1 < r.size(); ++p) {
    used += fuel(r[p], r[p + 1]);
    if (used > inst.fuel_capacity() + kSlack) return false;
    if (inst.is_depot(r[p + 1])) used = 0.0;
  }
  return true;
}

inline double path_cost(const RouteSeq& r, const Matrix& cost) {
  double c = 0.0;
  for (std::size_t p = 0; p + 1 < r.size(); ++p) c += cost(r[p], r[p + 1]);
  return c;
}

/// Calls fn(route) for every depot placement on the target-target edges of
/// `seq`: each edge direct or through any single depot.
inline void for_each_placement(const std::vector<VertexId>& seq, const Instance& inst,
                               const std::function<void(const RouteSeq&)>& fn) {
  const std::size_t edges = seq.empty() ? 0 : seq.size() - 1;
  const auto& depots = inst.depots();
  std::vector<std::size_t> choice(edges, 0);  // 0 direct, k -> depots[k-1]
  for (;;) {
    RouteSeq r{inst.home_depot()};
    for (std::size_t k = 0; k < seq.size(); ++k) {
      r.push_back(seq[k]);
      if (k < edges && choice[k] > 0) r.push_back(depots[choice[k] - 1]);
    }
    r.push_back(inst.home_depot());
    fn(r);
    std::size_t e = 0;
    while (e < edges && ++choice[e] > depots.size()) choice[e++] = 0;
    if (e == edges) break;
  }
}

struct BestRoute {
  bool feasible = false;
  double value = kInf;
  RouteSeq route;
};

inline bool better(double a, const RouteSeq& ra, double b, const RouteSeq& rb) {
  if (a < b - kTie) return true;
  if (a > b + kTie) return false;
  return ra < rb;
}

/// Cheapest fuel-feasible placement for one target order.
inline BestRoute best_placement(const std::vector<VertexId>& seq, const Instance& inst, const Matrix& cost,
                                const Matrix& fuel) {
  BestRoute best;
  for_each_placement(seq, inst, [&](const RouteSeq& r) {
    if (!segments_fit(r, inst, fuel)) return;
    const double c = path_cost(r, cost);
    if (!best.feasible || better(c, r, best.value, best.route)) best = {true, c, r};
  });
  return best;
}

/// Calls fn(groups) for every split of every permutation of the targets
/// into m non-empty consecutive groups.
inline void for_each_partition(const Instance& inst, const std::function<void(const std::vector<std::vector<VertexId>>&)>& fn) {
  std::vector<VertexId> perm = inst.targets();
  std::sort(perm.begin(), perm.end());
  const std::size_t n = perm.size();
  const std::size_t m = inst.vehicles();
  if (m == 0 || m > n) return;
  do {
    // cuts: positions 1..n-1, choose m-1 increasing
    std::vector<std::size_t> cut(m - 1);
    std::iota(cut.begin(), cut.end(), 1);
    for (;;) {
      std::vector<std::vector<VertexId>> groups;
      std::size_t start = 0;
      for (std::size_t k = 0; k <= cut.size(); ++k) {
        const std::size_t stop = k < cut.size() ? cut[k] : n;
        groups.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                            perm.begin() + static_cast<std::ptrdiff_t>(stop));
        start = stop;
      }
      fn(groups);
      // next combination of cuts
      std::ptrdiff_t i = static_cast<std::ptrdiff_t>(cut.size()) - 1;
      while (i >= 0 && cut[static_cast<std::size_t>(i)] == n - cut.size() + static_cast<std::size_t>(i)) --i;
      if (i < 0) break;
      ++cut[static_cast<std::size_t>(i)];
      for (std::size_t j = static_cast<std::size_t>(i) + 1; j < cut.size(); ++j) cut[j] = cut[j - 1] + 1;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

struct BestSet {
  bool feasible = false;
  double value = kInf;
  RouteSet routes;  // sorted
};

inline bool better_set(double a, const RouteSet& ra, double b, const RouteSet& rb) {
  if (a < b - kTie) return true;
  if (a > b + kTie) return false;
  return ra.routes < rb.routes;
}

/// Folds per-route scores over all ordered partitions.
inline BestSet best_over_partitions(const Instance& inst, const std::function<BestRoute(const std::vector<VertexId>&)>& score) {
  std::map<std::vector<VertexId>, BestRoute> memo;
  BestSet best;
  for_each_partition(inst, [&](const std::vector<std::vector<VertexId>>& groups) {
    RouteSet rs;
    double total = 0.0;
    for (const auto& g : groups) {
      auto it = memo.find(g);
      if (it == memo.end()) it = memo.emplace(g, score(g)).first;
      if (!it->second.feasible) return;
      total += it->second.value;
      rs.routes.push_back(it->second.route);
    }
    std::sort(rs.routes.begin(), rs.routes.end());
    if (!best.feasible || better_set(total, rs, best.value, best.routes)) best = {true, total, rs};
  });
  return best;
}

/// Deterministic optimum over every ordered partition and every placement.
inline BestSet deterministic_optimum(const Instance& inst, const Matrix& cost, const Matrix& fuel) {
  return best_over_partitions(inst, [&](const std::vector<VertexId>& g) { return best_placement(g, inst, cost, fuel); });
}

/// SAA optimum: route cost + probability-weighted brute-force recourse,
/// routes with any unrecoverable scenario rejected.
inline BestSet saa_optimum(const Instance& inst, const fcmurp::ScenarioSet& gamma) {
  std::vector<fcmurp::BestDepotTable> tables;
  for (const auto& s : gamma.scenarios) tables.push_back(fcmurp::precompute_best_depot(inst, s));
  return best_over_partitions(inst, [&](const std::vector<VertexId>& g) {
    BestRoute best;
    for_each_placement(g, inst, [&](const RouteSeq& r) {
      if (!segments_fit(r, inst, inst.nominal_fuel())) return;
      double v = path_cost(r, inst.cost());
      const RouteSet single{{r}};
      for (std::size_t s = 0; s < gamma.size(); ++s) {
        const auto plan = fcmurp::recourse_oracle(single, gamma.scenarios[s], tables[s], inst);
        if (!plan.feasible) return;
        v += gamma.scenarios[s].probability * plan.beta;
      }
      if (!best.feasible || better(v, r, best.value, best.route)) best = {true, v, r};
    });
    return best;
  });
}

/// Construction weights recomputed edge by edge from route sequences.
struct Weights {
  Matrix d, c_bar, f_bar;
};

inline Weights construction_weights(const Instance& inst, const fcmurp::ScenarioSet& delta,
                                    const std::vector<std::optional<RouteSet>>& solutions) {
  const std::size_t n = inst.vertex_count();
  Weights w{Matrix(n), Matrix(n), Matrix(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double used = 0.0;
      double fbar = 0.0;
      for (std::size_t s = 0; s < delta.size(); ++s) {
        fbar += delta.scenarios[s].probability * delta.scenarios[s].fuel(i, j);
        if (!solutions[s]) continue;
        bool on = false;
        for (const auto& r : solutions[s]->routes) {
          for (std::size_t p = 0; p + 1 < r.size(); ++p) on = on || (r[p] == i && r[p + 1] == j);
        }
        if (on) used += delta.scenarios[s].probability;
      }
      w.d(i, j) = 1.0 - used;
      w.c_bar(i, j) = inst.cost(i, j) * w.d(i, j);
      w.f_bar(i, j) = fbar;
    }
  }
  return w;
}

/// Replays a tabu move log and counts discipline violations: a swap chosen
/// again within `tenure` iterations without beating the previous best, a
/// tabu flag that disagrees with the replay, or a best value that rises.
inline std::size_t tabu_violations(const std::vector<fcmurp::TabuMove>& log, std::size_t tenure, double initial_best) {
  std::map<std::pair<VertexId, VertexId>, std::size_t> last;
  std::size_t bad = 0;
  double best = initial_best;
  for (const auto& mv : log) {
    if (mv.swap) {
      const auto key = std::make_pair(mv.swap->a, mv.swap->b);
      const auto it = last.find(key);
      const bool tabu = it != last.end() && mv.iteration - it->second <= tenure;
      if (tabu != mv.was_tabu) ++bad;
      if (tabu && !(mv.aspiration && mv.objective < best)) ++bad;
      last[key] = mv.iteration;
    }
    if (mv.best_objective > best) ++bad;
    best = mv.best_objective;
  }
  return bad;
}

}  // namespace oracle
