#pragma once

// Search building blocks shared by the deterministic and SAA solvers.

#include <limits>
#include <optional>
#include <vector>

#include "fcmurp/detsolve.hpp"

namespace fcmurp::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Label {
  double fuel = 0.0;
  double cost = 0.0;
  int parent = -1;
  int via = -1;  // refuel depot placed on the incoming edge, -1 for direct
};

/// Keeps labels that are not dominated in (fuel, cost). Input order breaks
/// exact ties so results are deterministic.
void pareto_filter(std::vector<Label>& labels);
std::vector<Label> start_labels(const DetProblem& pb, VertexId first, double cap);
std::vector<Label> extend_labels(const std::vector<Label>& labels, VertexId from, VertexId to, const DetProblem& pb,
                                 double cap);
/// Cheapest way to close a route from the last target back to the home
/// depot; returns the label index or -1.
int close_label(const std::vector<Label>& labels, VertexId tail, const DetProblem& pb, double cap, double& total);
/// Drops labels that cannot reach any depot from `at`.
void apply_arrival_rule(std::vector<Label>& labels, VertexId at, const DetProblem& pb, double cap);
double min_cost(const std::vector<Label>& labels);

/// Static per-vertex cheapest incoming / outgoing edge costs, where a
/// target-target edge may also be realized through any depot.
struct EdgeBounds {
  std::vector<double> min_in;
  std::vector<double> min_out;
  double min_in_home = kInf;
  double min_out_home = kInf;

  explicit EdgeBounds(const DetProblem& pb);

  /// routes_open: routes that still have to return home (open one included);
  /// routes_unstarted: routes that still have to leave home.
  [[nodiscard]] double completion(double sum_in_unvisited, double sum_out_unvisited, std::optional<VertexId> tail,
                                  std::size_t routes_open, std::size_t routes_unstarted) const;
};

/// Targets by decreasing Euclidean distance from the home depot, then id.
std::vector<VertexId> ranked_targets(const Instance& inst);
double solution_cost(const RouteSet& routes, const Matrix& cost);

}  // namespace fcmurp::detail
