#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fcmurp/model.hpp"

namespace fcmurp {

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t n_targets = 10;
  std::size_t n_refuel_depots = 4;
  std::size_t vehicles = 3;
  double fuel_factor = 2.25;
  double grid = 100.0;
  double gamma_shape = 4.0;
  double gamma_scale_ratio = 0.25;

  /// Throws std::invalid_argument on an invalid configuration.
  void validate() const;
};

enum class QuadrantLabel { mean, congested, sparse };

[[nodiscard]] const char* to_string(QuadrantLabel label);
[[nodiscard]] QuadrantLabel quadrant_label_from_string(std::string_view s);

/// Quadrants are indexed 0..3 as (x >= grid/2) + 2 * (y >= grid/2); points on
/// the midlines belong to the upper/right quadrant.
struct QuadrantMap {
  double grid = 100.0;
  std::array<QuadrantLabel, 4> quadrants{};
  std::vector<QuadrantLabel> vertex_labels;

  friend bool operator==(const QuadrantMap&, const QuadrantMap&) = default;
};

[[nodiscard]] std::size_t quadrant_of(const Point& p, double grid);

/// Depot layout shared by every generated instance: home depot at the grid
/// center, refuel depots at the quadrant centers.
[[nodiscard]] std::vector<Point> fixed_depot_positions(std::size_t n_refuel_depots, double grid);

/// Vertex layout: 0 is the home depot, 1..k the refuel depots, then targets.
[[nodiscard]] Instance generate_instance(const GenConfig& config);

[[nodiscard]] QuadrantMap assign_quadrants(const Instance& instance, double grid, std::uint64_t seed);

/// Marginal family for per-edge fuel. A point mass reproduces the mean.
struct FuelDistribution {
  enum class Kind { gamma, point_mass };
  Kind kind = Kind::gamma;
  double shape = 4.0;
  double scale_ratio = 0.25;
};

inline constexpr std::size_t kMaxRejections = 10000;

/// Draws `count` equiprobable scenarios. Scenario i uses the substream
/// derive_seed(seed, stream, i), so the result does not depend on the number
/// of worker threads.
[[nodiscard]] ScenarioSet sample_scenarios(const Instance& instance, const QuadrantMap& qmap, std::uint64_t seed,
                                           std::size_t count, const FuelDistribution& dist = {},
                                           std::string_view stream = "scenarios");

/// Single scenario equal to the nominal fuel, probability 1.
[[nodiscard]] ScenarioSet nominal_scenario_set(const Instance& instance);

}  // namespace fcmurp
