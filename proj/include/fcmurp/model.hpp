#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcmurp {

using VertexId = std::size_t;
using RouteSeq = std::vector<VertexId>;

/// Absolute tolerance used for cost/fuel comparisons throughout the toolkit.
inline constexpr double kTolerance = 1e-6;

/// Tolerance under which two objective values are treated as tied, after
/// which the lexicographic canonical order decides.
inline constexpr double kTieTolerance = 1e-9;

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Dense square matrix indexed by ordered vertex pairs. Diagonal is unused.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), v_(n * n, fill) {}

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
  [[nodiscard]] const std::vector<double>& values() const { return v_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> v_;
};

[[nodiscard]] Matrix euclidean_matrix(const std::vector<Point>& points);
[[nodiscard]] double euclidean(const Point& a, const Point& b);

/// Raw fields of an instance as read from disk or produced by a generator.
struct InstanceData {
  std::vector<VertexId> targets;
  VertexId home_depot = 0;
  std::vector<VertexId> refuel_depots;
  std::vector<Point> coordinates;
  Matrix cost;
  Matrix nominal_fuel;
  std::size_t vehicles = 1;
  double fuel_capacity = 0.0;
  double lambda = 0.0;
};

/// Immutable problem instance. Derived per-vertex caches (depot membership,
/// cheapest fuel to/from a depot, metric flag) are computed on construction.
class Instance {
 public:
  explicit Instance(InstanceData data);

  [[nodiscard]] const InstanceData& data() const { return data_; }
  [[nodiscard]] const std::vector<VertexId>& targets() const { return data_.targets; }
  [[nodiscard]] VertexId home_depot() const { return data_.home_depot; }
  [[nodiscard]] const std::vector<VertexId>& refuel_depots() const { return data_.refuel_depots; }
  /// All depots: home depot first, then refuel depots in declared order.
  [[nodiscard]] const std::vector<VertexId>& depots() const { return depots_; }
  [[nodiscard]] const std::vector<Point>& coordinates() const { return data_.coordinates; }
  [[nodiscard]] const Matrix& cost() const { return data_.cost; }
  [[nodiscard]] const Matrix& nominal_fuel() const { return data_.nominal_fuel; }
  [[nodiscard]] double cost(VertexId i, VertexId j) const { return data_.cost(i, j); }
  [[nodiscard]] double nominal_fuel(VertexId i, VertexId j) const { return data_.nominal_fuel(i, j); }
  [[nodiscard]] std::size_t vehicles() const { return data_.vehicles; }
  [[nodiscard]] double fuel_capacity() const { return data_.fuel_capacity; }
  [[nodiscard]] double lambda() const { return data_.lambda; }
  [[nodiscard]] std::size_t vertex_count() const { return data_.coordinates.size(); }
  [[nodiscard]] std::size_t target_count() const { return data_.targets.size(); }

  [[nodiscard]] bool is_depot(VertexId v) const { return is_depot_[v] != 0; }
  [[nodiscard]] bool is_target(VertexId v) const { return is_target_[v] != 0; }
  /// min over depots d of nominal fuel(v, d)
  [[nodiscard]] double min_fuel_to_depot(VertexId v) const { return to_depot_[v]; }
  /// min over depots d of nominal fuel(d, v)
  [[nodiscard]] double min_fuel_from_depot(VertexId v) const { return from_depot_[v]; }
  /// Costs satisfy the triangle inequality (within kTieTolerance).
  [[nodiscard]] bool metric() const { return metric_; }

 private:
  InstanceData data_;
  std::vector<VertexId> depots_;
  std::vector<char> is_depot_;
  std::vector<char> is_target_;
  std::vector<double> to_depot_;
  std::vector<double> from_depot_;
  bool metric_ = false;
};

/// Max Euclidean distance between any depot and any target.
[[nodiscard]] double compute_lambda(const InstanceData& data);

/// True when m(i,k) <= m(i,j) + m(j,k) + tol for all distinct triples.
[[nodiscard]] bool satisfies_triangle_inequality(const Matrix& m, double tol = kTieTolerance);

struct Scenario {
  std::size_t id = 0;
  double probability = 1.0;
  Matrix fuel;
};

/// A finite scenario sample. `tag` records where the sample came from so that
/// estimates built on different samples cannot be mixed silently.
struct ScenarioSet {
  std::vector<Scenario> scenarios;
  std::string tag;

  [[nodiscard]] std::size_t size() const { return scenarios.size(); }
  [[nodiscard]] bool empty() const { return scenarios.empty(); }
  [[nodiscard]] double total_probability() const;
};

/// First-stage solution: exactly m closed routes from/to the home depot.
struct RouteSet {
  std::vector<RouteSeq> routes;

  friend bool operator==(const RouteSet&, const RouteSet&) = default;
};

struct ValidationIssue {
  bool fatal = true;
  std::string message;
};

struct ValidationResult {
  std::vector<ValidationIssue> issues;

  [[nodiscard]] bool ok() const;
  [[nodiscard]] bool has(const std::string& fragment) const;
};

[[nodiscard]] ValidationResult validate_instance(const Instance& instance,
                                                 const ScenarioSet* scenarios = nullptr);

/// Throws StructuralError unless every route starts/ends at the home depot,
/// every target is visited exactly once and there are exactly m routes.
void check_structure(const RouteSet& routes, const Instance& instance);

/// Drops consecutive duplicate depot visits.
[[nodiscard]] RouteSeq normalize_route(const RouteSeq& route);
[[nodiscard]] RouteSet normalize(const RouteSet& routes);

/// Routes sorted lexicographically; route order carries no meaning.
[[nodiscard]] RouteSet canonical(const RouteSet& routes);

/// Strict "better solution" order: lower cost, or tied cost and
/// lexicographically smaller canonical form.
[[nodiscard]] bool better_solution(double cost_a, const RouteSet& a, double cost_b, const RouteSet& b);

[[nodiscard]] double sequence_cost(const RouteSeq& route, const Matrix& cost);
[[nodiscard]] double route_cost(const RouteSet& routes, const Instance& instance);
[[nodiscard]] double route_cost(const RouteSet& routes, const Instance& instance, const Matrix& cost);

/// Edge-indicator vector x, row-major over ordered vertex pairs.
[[nodiscard]] std::vector<std::uint8_t> edge_indicator(const RouteSet& routes, std::size_t vertex_count);

/// Rebuilds a route set from its edge indicators. Each route is traced from
/// one outgoing home-depot edge; at refuel depots the smallest unused
/// outgoing edge is taken. Output is in canonical order.
[[nodiscard]] RouteSet from_edge_indicator(const std::vector<std::uint8_t>& x, const Instance& instance);

/// Cumulative fuel on arrival at each position of each route, measured
/// since the last depot visit. Position 0 (the home depot) is 0.
struct FuelProfile {
  std::vector<std::vector<double>> arrival;
};

enum class FuelCheck { plain, strengthened };

struct FeasibilityResult {
  bool feasible = false;
  FuelProfile profile;
};

/// Plain check: every depot-to-depot segment consumes at most F.
/// Strengthened check additionally requires, on arrival at each target j,
/// remaining fuel >= min_d fuel(j, d).
[[nodiscard]] FeasibilityResult nominal_feasibility(const RouteSet& routes, const Instance& instance,
                                                    FuelCheck check = FuelCheck::plain);
[[nodiscard]] FeasibilityResult fuel_feasibility(const RouteSet& routes, const Instance& instance,
                                                 const Matrix& fuel, FuelCheck check = FuelCheck::plain);

/// Target visit order of a route with all depots removed.
[[nodiscard]] std::vector<VertexId> targets_of(const RouteSeq& route, const Instance& instance);

}  // namespace fcmurp
