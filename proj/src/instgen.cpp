#include "fcmurp/instgen.hpp"

#include <stdexcept>
#include <string>

#include "fcmurp/parallel.hpp"
#include "fcmurp/rng.hpp"

namespace fcmurp {

namespace {
constexpr int kMaxGenerationAttempts = 64;
}

void GenConfig::validate() const {
  if (n_targets < 1) throw std::invalid_argument("n_targets must be at least 1");
  if (vehicles < 1) throw std::invalid_argument("vehicles must be at least 1");
  if (vehicles > n_targets) throw std::invalid_argument("vehicles must not exceed n_targets");
  if (n_refuel_depots > 4) throw std::invalid_argument("at most 4 refuel depots (one per quadrant center)");
  if (!(fuel_factor > 0.0)) throw std::invalid_argument("fuel_factor must be positive");
  if (!(grid > 0.0)) throw std::invalid_argument("grid must be positive");
  if (!(gamma_shape > 0.0)) throw std::invalid_argument("gamma_shape must be positive");
  if (!(gamma_scale_ratio > 0.0)) throw std::invalid_argument("gamma_scale_ratio must be positive");
}

const char* to_string(QuadrantLabel label) {
  switch (label) {
    case QuadrantLabel::congested: return "congested";
    case QuadrantLabel::sparse: return "sparse";
    case QuadrantLabel::mean: break;
  }
  return "mean";
}

QuadrantLabel quadrant_label_from_string(std::string_view s) {
  if (s == "congested") return QuadrantLabel::congested;
  if (s == "sparse") return QuadrantLabel::sparse;
  if (s == "mean") return QuadrantLabel::mean;
  throw std::invalid_argument("unknown quadrant label: " + std::string(s));
}

std::size_t quadrant_of(const Point& p, double grid) {
  const double half = grid / 2.0;
  return (p.x >= half ? 1U : 0U) + (p.y >= half ? 2U : 0U);
}

std::vector<Point> fixed_depot_positions(std::size_t n_refuel_depots, double grid) {
  const double q = grid / 4.0;
  const std::array<Point, 4> refuel{{{q, q}, {q, 3 * q}, {3 * q, q}, {3 * q, 3 * q}}};
  std::vector<Point> out{{grid / 2.0, grid / 2.0}};
  for (std::size_t k = 0; k < n_refuel_depots; ++k) out.push_back(refuel[k]);
  return out;
}

Instance generate_instance(const GenConfig& config) {
  config.validate();
  const auto depots = fixed_depot_positions(config.n_refuel_depots, config.grid);
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    Rng rng(derive_seed(config.seed, "instance", static_cast<std::uint64_t>(attempt)));
    InstanceData data;
    data.coordinates = depots;
    data.home_depot = 0;
    for (std::size_t k = 1; k < depots.size(); ++k) data.refuel_depots.push_back(k);
    for (std::size_t t = 0; t < config.n_targets; ++t) {
      const double x = rng.uniform() * config.grid;
      const double y = rng.uniform() * config.grid;
      data.targets.push_back(data.coordinates.size());
      data.coordinates.push_back({x, y});
    }
    data.cost = euclidean_matrix(data.coordinates);
    data.nominal_fuel = data.cost;
    data.vehicles = config.vehicles;
    data.lambda = compute_lambda(data);
    data.fuel_capacity = config.fuel_factor * data.lambda;
    Instance instance(std::move(data));
    if (validate_instance(instance).ok()) return instance;
  }
  throw std::runtime_error("infeasible configuration: no reachable instance after " +
                           std::to_string(kMaxGenerationAttempts) + " attempts");
}

QuadrantMap assign_quadrants(const Instance& instance, double grid, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "quadrants"));
  QuadrantMap map;
  map.grid = grid;
  map.quadrants.fill(QuadrantLabel::mean);
  const auto congested = rng.below(4);
  auto sparse = rng.below(3);
  if (sparse >= congested) ++sparse;
  map.quadrants[congested] = QuadrantLabel::congested;
  map.quadrants[sparse] = QuadrantLabel::sparse;
  for (const auto& p : instance.coordinates()) map.vertex_labels.push_back(map.quadrants[quadrant_of(p, grid)]);
  return map;
}

namespace {

QuadrantLabel edge_class(const QuadrantMap& qmap, VertexId i, VertexId j) {
  const auto a = qmap.vertex_labels[i];
  const auto b = qmap.vertex_labels[j];
  if (a == QuadrantLabel::congested || b == QuadrantLabel::congested) return QuadrantLabel::congested;
  if (a == QuadrantLabel::sparse || b == QuadrantLabel::sparse) return QuadrantLabel::sparse;
  return QuadrantLabel::mean;
}

double conditioned_gamma(Rng& rng, double shape, double scale, double mean, bool above) {
  for (std::size_t tries = 0; tries < kMaxRejections; ++tries) {
    const double g = rng.gamma(shape, scale);
    if (above ? g >= mean : g <= mean) return g;
  }
  throw std::runtime_error("gamma rejection sampler exceeded retry limit");
}

}  // namespace

ScenarioSet sample_scenarios(const Instance& instance, const QuadrantMap& qmap, std::uint64_t seed,
                             std::size_t count, const FuelDistribution& dist, std::string_view stream) {
  if (count < 1) throw std::invalid_argument("scenario count must be at least 1");
  const std::size_t n = instance.vertex_count();
  if (qmap.vertex_labels.size() != n) throw StructuralError("quadrant map does not match instance");
  ScenarioSet set;
  set.scenarios.resize(count);
  set.tag = std::string(stream) + ":" + std::to_string(seed) + ":" + std::to_string(count);
  const Matrix& mean = instance.nominal_fuel();
  parallel_for(count, [&](std::size_t s) {
    Scenario sc;
    sc.id = s;
    sc.probability = 1.0 / static_cast<double>(count);
    sc.fuel = mean;
    if (dist.kind == FuelDistribution::Kind::gamma) {
      Rng rng(derive_seed(seed, stream, s));
      for (VertexId i = 0; i < n; ++i) {
        for (VertexId j = 0; j < n; ++j) {
          if (i == j) continue;
          const auto cls = edge_class(qmap, i, j);
          if (cls == QuadrantLabel::mean) continue;
          const double e = mean(i, j);
          sc.fuel(i, j) = conditioned_gamma(rng, dist.shape, dist.scale_ratio * e, e, cls == QuadrantLabel::congested);
        }
      }
    }
    set.scenarios[s] = std::move(sc);
  });
  return set;
}

ScenarioSet nominal_scenario_set(const Instance& instance) {
  ScenarioSet set;
  set.tag = "nominal";
  set.scenarios.push_back({0, 1.0, instance.nominal_fuel()});
  return set;
}

}  // namespace fcmurp
