#pragma once

#include <vector>

#include "fcmurp/instgen.hpp"
#include "fcmurp/model.hpp"
#include "fcmurp/rng.hpp"

namespace testing {

/// Euclidean instance: vertex 0 is the home depot, then `refuel.size()`
/// refuel depots, then the targets.
inline fcmurp::Instance euclidean_instance(fcmurp::Point home, const std::vector<fcmurp::Point>& refuel,
                                           const std::vector<fcmurp::Point>& targets, std::size_t m, double F) {
  fcmurp::InstanceData d;
  d.coordinates.push_back(home);
  d.home_depot = 0;
  for (const auto& p : refuel) {
    d.refuel_depots.push_back(static_cast<fcmurp::VertexId>(d.coordinates.size()));
    d.coordinates.push_back(p);
  }
  for (const auto& p : targets) {
    d.targets.push_back(static_cast<fcmurp::VertexId>(d.coordinates.size()));
    d.coordinates.push_back(p);
  }
  d.cost = fcmurp::euclidean_matrix(d.coordinates);
  d.nominal_fuel = d.cost;
  d.vehicles = m;
  d.fuel_capacity = F;
  d.lambda = fcmurp::compute_lambda(d);
  return fcmurp::Instance(std::move(d));
}

/// Generated instance with default grid and depots.
inline fcmurp::Instance generated(std::uint64_t seed, std::size_t n, std::size_t m, double factor = 2.25) {
  fcmurp::GenConfig g;
  g.seed = seed;
  g.n_targets = n;
  g.vehicles = m;
  g.fuel_factor = factor;
  return fcmurp::generate_instance(g);
}

/// Single scenario with the given fuel matrix and probability 1.
inline fcmurp::ScenarioSet single(const fcmurp::Matrix& fuel) {
  fcmurp::ScenarioSet s;
  s.scenarios.push_back({0, 1.0, fuel});
  s.tag = "single";
  return s;
}

/// Random route set: shuffled targets cut into m non-empty routes, no depots.
inline fcmurp::RouteSet random_routes(const fcmurp::Instance& inst, fcmurp::Rng& rng) {
  std::vector<fcmurp::VertexId> t = inst.targets();
  for (std::size_t i = t.size(); i > 1; --i) std::swap(t[i - 1], t[rng.below(i)]);
  const std::size_t m = inst.vehicles();
  std::vector<std::size_t> sizes(m, 1);
  for (std::size_t k = m; k < t.size(); ++k) ++sizes[rng.below(m)];
  fcmurp::RouteSet rs;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < m; ++k) {
    fcmurp::RouteSeq r{inst.home_depot()};
    for (std::size_t q = 0; q < sizes[k]; ++q) r.push_back(t[pos++]);
    r.push_back(inst.home_depot());
    rs.routes.push_back(std::move(r));
  }
  return rs;
}

}  // namespace testing
