#include "fcmurp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fcmurp {

double euclidean(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Matrix euclidean_matrix(const std::vector<Point>& points) {
  Matrix m(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i != j) m(i, j) = euclidean(points[i], points[j]);
    }
  }
  return m;
}

double compute_lambda(const InstanceData& data) {
  double lambda = 0.0;
  auto scan = [&](VertexId d) {
    for (VertexId t : data.targets) lambda = std::max(lambda, euclidean(data.coordinates[d], data.coordinates[t]));
  };
  scan(data.home_depot);
  for (VertexId d : data.refuel_depots) scan(d);
  return lambda;
}

bool satisfies_triangle_inequality(const Matrix& m, double tol) {
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        if (m(i, k) > m(i, j) + m(j, k) + tol) return false;
      }
    }
  }
  return true;
}

Instance::Instance(InstanceData data) : data_(std::move(data)) {
  const std::size_t n = data_.coordinates.size();
  if (data_.cost.size() != n || data_.nominal_fuel.size() != n) {
    throw StructuralError("cost/fuel matrix dimension does not match vertex count");
  }
  auto in_range = [n](VertexId v) { return v < n; };
  if (!in_range(data_.home_depot) || !std::all_of(data_.targets.begin(), data_.targets.end(), in_range) ||
      !std::all_of(data_.refuel_depots.begin(), data_.refuel_depots.end(), in_range)) {
    throw StructuralError("vertex id out of range");
  }
  depots_.push_back(data_.home_depot);
  depots_.insert(depots_.end(), data_.refuel_depots.begin(), data_.refuel_depots.end());
  is_depot_.assign(n, 0);
  is_target_.assign(n, 0);
  for (VertexId d : depots_) is_depot_[d] = 1;
  for (VertexId t : data_.targets) is_target_[t] = 1;

  to_depot_.assign(n, std::numeric_limits<double>::infinity());
  from_depot_.assign(n, std::numeric_limits<double>::infinity());
  for (VertexId v = 0; v < n; ++v) {
    for (VertexId d : depots_) {
      if (d == v) {
        to_depot_[v] = 0.0;
        from_depot_[v] = 0.0;
        continue;
      }
      to_depot_[v] = std::min(to_depot_[v], data_.nominal_fuel(v, d));
      from_depot_[v] = std::min(from_depot_[v], data_.nominal_fuel(d, v));
    }
  }
  metric_ = satisfies_triangle_inequality(data_.cost);
}

double ScenarioSet::total_probability() const {
  double total = 0.0;
  for (const auto& s : scenarios) total += s.probability;
  return total;
}

bool ValidationResult::ok() const {
  return std::none_of(issues.begin(), issues.end(), [](const auto& i) { return i.fatal; });
}

bool ValidationResult::has(const std::string& fragment) const {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const auto& i) { return i.message.find(fragment) != std::string::npos; });
}

ValidationResult validate_instance(const Instance& instance, const ScenarioSet* scenarios) {
  ValidationResult result;
  auto fatal = [&](std::string msg) { result.issues.push_back({true, std::move(msg)}); };
  const auto& data = instance.data();
  const std::size_t n = instance.vertex_count();

  if (data.targets.empty()) fatal("no targets");
  if (data.vehicles < 1) fatal("vehicle count must be at least 1");
  if (data.vehicles > data.targets.size()) fatal("more vehicles than targets (empty routes are not allowed)");
  if (!(data.fuel_capacity > 0.0)) fatal("fuel capacity must be positive");

  std::vector<int> seen(n, 0);
  for (VertexId v : instance.depots()) ++seen[v];
  for (VertexId v : data.targets) ++seen[v];
  for (VertexId v = 0; v < n; ++v) {
    if (seen[v] > 1) fatal("vertex " + std::to_string(v) + " is listed more than once");
  }

  bool positive = true;
  for (VertexId i = 0; i < n && positive; ++i) {
    for (VertexId j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!(data.cost(i, j) > 0.0) || !(data.nominal_fuel(i, j) > 0.0)) {
        fatal("non-positive cost or nominal fuel on edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
        positive = false;
        break;
      }
    }
  }

  const double lambda = compute_lambda(data);
  if (std::abs(lambda - data.lambda) > kTolerance) {
    std::ostringstream os;
    os << "lambda " << data.lambda << " does not match recomputed " << lambda;
    fatal(os.str());
  }

  for (VertexId t : data.targets) {
    if (instance.min_fuel_from_depot(t) + instance.min_fuel_to_depot(t) > data.fuel_capacity + kTolerance) {
      fatal("unreachable target " + std::to_string(t));
    }
  }

  if (!instance.metric()) result.issues.push_back({false, "costs violate the triangle inequality"});

  if (scenarios != nullptr) {
    if (scenarios->empty()) fatal("empty scenario set");
    if (std::abs(scenarios->total_probability() - 1.0) > 1e-9) fatal("probabilities do not sum to 1");
    for (const auto& s : scenarios->scenarios) {
      if (s.fuel.size() != n) {
        fatal("scenario " + std::to_string(s.id) + " has the wrong dimension");
        continue;
      }
      if (!(s.probability > 0.0) || s.probability > 1.0) {
        fatal("scenario " + std::to_string(s.id) + " has probability outside (0,1]");
      }
      for (VertexId i = 0; i < n; ++i) {
        for (VertexId j = 0; j < n; ++j) {
          if (i != j && !(s.fuel(i, j) > 0.0)) {
            fatal("scenario " + std::to_string(s.id) + " has non-positive fuel");
            i = n;
            break;
          }
        }
      }
    }
  }
  return result;
}

void check_structure(const RouteSet& routes, const Instance& instance) {
  if (routes.routes.size() != instance.vehicles()) {
    throw StructuralError("expected " + std::to_string(instance.vehicles()) + " routes, got " +
                          std::to_string(routes.routes.size()));
  }
  std::vector<int> visits(instance.vertex_count(), 0);
  for (const auto& r : routes.routes) {
    if (r.size() < 3 || r.front() != instance.home_depot() || r.back() != instance.home_depot()) {
      throw StructuralError("route must start and end at the home depot and visit a target");
    }
    for (std::size_t p = 0; p < r.size(); ++p) {
      if (r[p] >= instance.vertex_count()) throw StructuralError("vertex id out of range");
      if (p > 0 && r[p] == r[p - 1]) throw StructuralError("self-loop in route");
      if (instance.is_target(r[p])) ++visits[r[p]];
    }
  }
  for (VertexId t : instance.targets()) {
    if (visits[t] != 1) throw StructuralError("target " + std::to_string(t) + " is not visited exactly once");
  }
}

RouteSeq normalize_route(const RouteSeq& route) {
  RouteSeq out;
  out.reserve(route.size());
  for (VertexId v : route) {
    if (!out.empty() && out.back() == v) continue;
    out.push_back(v);
  }
  return out;
}

RouteSet normalize(const RouteSet& routes) {
  RouteSet out;
  for (const auto& r : routes.routes) out.routes.push_back(normalize_route(r));
  return out;
}

RouteSet canonical(const RouteSet& routes) {
  RouteSet out = routes;
  std::sort(out.routes.begin(), out.routes.end());
  return out;
}

bool better_solution(double cost_a, const RouteSet& a, double cost_b, const RouteSet& b) {
  if (cost_a < cost_b - kTieTolerance) return true;
  if (cost_a > cost_b + kTieTolerance) return false;
  return canonical(a).routes < canonical(b).routes;
}

double sequence_cost(const RouteSeq& route, const Matrix& cost) {
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < route.size(); ++p) total += cost(route[p], route[p + 1]);
  return total;
}

double route_cost(const RouteSet& routes, const Instance& instance, const Matrix& cost) {
  check_structure(routes, instance);
  double total = 0.0;
  for (const auto& r : routes.routes) total += sequence_cost(r, cost);
  return total;
}

double route_cost(const RouteSet& routes, const Instance& instance) {
  return route_cost(routes, instance, instance.cost());
}

std::vector<std::uint8_t> edge_indicator(const RouteSet& routes, std::size_t vertex_count) {
  std::vector<std::uint8_t> x(vertex_count * vertex_count, 0);
  for (const auto& r : routes.routes) {
    for (std::size_t p = 0; p + 1 < r.size(); ++p) x[r[p] * vertex_count + r[p + 1]] = 1;
  }
  return x;
}

RouteSet from_edge_indicator(const std::vector<std::uint8_t>& x, const Instance& instance) {
  const std::size_t n = instance.vertex_count();
  if (x.size() != n * n) throw StructuralError("edge indicator has the wrong dimension");
  std::vector<std::uint8_t> unused = x;
  auto next_from = [&](VertexId v) -> std::optional<VertexId> {
    for (VertexId w = 0; w < n; ++w) {
      if (unused[v * n + w]) {
        unused[v * n + w] = 0;
        return w;
      }
    }
    return std::nullopt;
  };
  const VertexId d0 = instance.home_depot();
  RouteSet out;
  while (auto first = next_from(d0)) {
    RouteSeq r{d0, *first};
    while (r.back() != d0) {
      auto nxt = next_from(r.back());
      if (!nxt) throw StructuralError("edge indicator does not describe closed routes");
      r.push_back(*nxt);
      if (r.size() > n * n + 2) throw StructuralError("edge indicator contains a cycle");
    }
    out.routes.push_back(std::move(r));
  }
  return canonical(out);
}

FeasibilityResult fuel_feasibility(const RouteSet& routes, const Instance& instance, const Matrix& fuel,
                                   FuelCheck check) {
  FeasibilityResult result;
  result.feasible = true;
  const double cap = instance.fuel_capacity();
  auto min_to_depot = [&](VertexId v) {
    double best = std::numeric_limits<double>::infinity();
    for (VertexId d : instance.depots()) best = std::min(best, fuel(v, d));
    return best;
  };
  for (const auto& r : routes.routes) {
    std::vector<double> arrival(r.size(), 0.0);
    double used = 0.0;
    for (std::size_t p = 1; p < r.size(); ++p) {
      used += fuel(r[p - 1], r[p]);
      arrival[p] = used;
      if (used > cap + kTolerance) result.feasible = false;
      if (instance.is_depot(r[p])) {
        used = 0.0;
      } else if (check == FuelCheck::strengthened && used + min_to_depot(r[p]) > cap + kTolerance) {
        result.feasible = false;
      }
    }
    result.profile.arrival.push_back(std::move(arrival));
  }
  return result;
}

FeasibilityResult nominal_feasibility(const RouteSet& routes, const Instance& instance, FuelCheck check) {
  return fuel_feasibility(routes, instance, instance.nominal_fuel(), check);
}

std::vector<VertexId> targets_of(const RouteSeq& route, const Instance& instance) {
  std::vector<VertexId> out;
  for (VertexId v : route) {
    if (instance.is_target(v)) out.push_back(v);
  }
  return out;
}

}  // namespace fcmurp
