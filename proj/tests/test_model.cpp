#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fcmurp/detsolve.hpp"
#include "fcmurp/model.hpp"
#include "fcmurp/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fcmurp;

namespace {

/// Two-vertex-plus-target toy with explicit matrices (not Euclidean).
Instance line_instance(double leg_fuel, double F, double leg_cost = 10.0) {
  InstanceData d;
  d.coordinates = {{0, 0}, {leg_cost, 0}};
  d.home_depot = 0;
  d.targets = {1};
  d.cost = Matrix(2);
  d.cost(0, 1) = d.cost(1, 0) = leg_cost;
  d.nominal_fuel = Matrix(2);
  d.nominal_fuel(0, 1) = d.nominal_fuel(1, 0) = leg_fuel;
  d.vehicles = 1;
  d.fuel_capacity = F;
  d.lambda = compute_lambda(d);
  return Instance(std::move(d));
}

}  // namespace

TEST_CASE("route cost of a single two-leg route") {
  const auto inst = line_instance(30, 100);
  CHECK(route_cost(RouteSet{{{0, 1, 0}}}, inst) == doctest::Approx(20.0));
}

TEST_CASE("structural errors") {
  const auto inst = line_instance(30, 100);
  CHECK_THROWS_AS(check_structure(RouteSet{{{0, 0}}}, inst), StructuralError);
  CHECK_THROWS_AS((void)route_cost(RouteSet{{{0, 0}}}, inst), StructuralError);
  CHECK_THROWS_AS(check_structure(RouteSet{{{1, 0}}}, inst), StructuralError);
  CHECK_THROWS_AS(check_structure(RouteSet{{{0, 1, 1, 0}}}, inst), StructuralError);
  CHECK_THROWS_AS(check_structure(RouteSet{{{0, 1, 0}, {0, 1, 0}}}, inst), StructuralError);
  CHECK_NOTHROW(check_structure(RouteSet{{{0, 1, 0}}}, inst));
}

TEST_CASE("route cost equals coordinate re-summation on random instances") {
  Rng rng(11);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = testing::generated(seed, 5, 2);
    const auto rs = testing::random_routes(inst, rng);
    double expect = 0.0;
    for (const auto& r : rs.routes) {
      for (std::size_t p = 0; p + 1 < r.size(); ++p) {
        const auto& a = inst.coordinates()[r[p]];
        const auto& b = inst.coordinates()[r[p + 1]];
        expect += std::hypot(a.x - b.x, a.y - b.y);
      }
    }
    CHECK(route_cost(rs, inst) == doctest::Approx(expect).epsilon(1e-12));
    RouteSet reversed = rs;
    std::reverse(reversed.routes.begin(), reversed.routes.end());
    CHECK(route_cost(reversed, inst) == doctest::Approx(route_cost(rs, inst)).epsilon(1e-12));
  }
}

TEST_CASE("nominal feasibility examples") {
  const auto ok = nominal_feasibility(RouteSet{{{0, 1, 0}}}, line_instance(30, 100));
  CHECK(ok.feasible);
  REQUIRE(ok.profile.arrival.size() == 1);
  CHECK(ok.profile.arrival[0] == std::vector<double>{0.0, 30.0, 60.0});
  CHECK_FALSE(nominal_feasibility(RouteSet{{{0, 1, 0}}}, line_instance(30, 50)).feasible);
}

TEST_CASE("nominal feasibility matches segment summation on random routes") {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = testing::generated(seed, 6, 1, 1.0 + 0.1 * static_cast<double>(seed % 10));
    auto rs = testing::random_routes(inst, rng);
    // Sprinkle depots on some target-target edges.
    for (auto& r : rs.routes) {
      RouteSeq with{r.front()};
      for (std::size_t p = 1; p < r.size(); ++p) {
        if (inst.is_target(r[p - 1]) && inst.is_target(r[p]) && rng.below(3) == 0) {
          with.push_back(inst.refuel_depots()[rng.below(inst.refuel_depots().size())]);
        }
        with.push_back(r[p]);
      }
      r = with;
    }
    bool expect = true;
    for (const auto& r : rs.routes) expect = expect && oracle::segments_fit(r, inst, inst.nominal_fuel());
    CHECK(nominal_feasibility(rs, inst).feasible == expect);
  }
}

TEST_CASE("strengthened check is never looser and only cuts routes that strand a target") {
  Rng rng(9);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = testing::generated(seed, 5, 1, 0.9 + 0.05 * static_cast<double>(seed % 12));
    const auto rs = testing::random_routes(inst, rng);
    const auto plain = nominal_feasibility(rs, inst, FuelCheck::plain);
    const auto strong = nominal_feasibility(rs, inst, FuelCheck::strengthened);
    if (strong.feasible) CHECK(plain.feasible);
    if (plain.feasible) {
      bool every_target_can_reach_depot = true;
      for (std::size_t k = 0; k < rs.routes.size(); ++k) {
        for (std::size_t p = 0; p < rs.routes[k].size(); ++p) {
          const VertexId v = rs.routes[k][p];
          if (!inst.is_target(v)) continue;
          const double remaining = inst.fuel_capacity() - plain.profile.arrival[k][p];
          if (remaining + kTolerance < inst.min_fuel_to_depot(v)) every_target_can_reach_depot = false;
        }
      }
      CHECK(strong.feasible == every_target_can_reach_depot);
    }
  }
}

TEST_CASE("validation messages") {
  CHECK(validate_instance(line_instance(25, 100)).ok());
  const auto bad = validate_instance(line_instance(60, 100));
  CHECK_FALSE(bad.ok());
  CHECK(bad.has("unreachable target"));

  const auto inst = line_instance(25, 100);
  ScenarioSet s;
  s.scenarios.push_back({0, 0.99, inst.nominal_fuel()});
  const auto res = validate_instance(inst, &s);
  CHECK(res.has("probabilities do not sum to 1"));
}

TEST_CASE("lambda is the largest depot-target distance") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = testing::generated(seed, 8, 3);
    double expect = 0.0;
    for (VertexId d : inst.depots()) {
      for (VertexId t : inst.targets()) expect = std::max(expect, euclidean(inst.coordinates()[d], inst.coordinates()[t]));
    }
    CHECK(inst.lambda() == expect);
    CHECK(inst.fuel_capacity() == doctest::Approx(2.25 * expect).epsilon(1e-15));
  }
}

TEST_CASE("edge-indicator round trip") {
  Rng rng(3);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = testing::generated(seed, 7, 1 + seed % 3);
    auto rs = testing::random_routes(inst, rng);
    // Each refuel depot used at most once so tracing is unambiguous.
    std::vector<VertexId> spare = inst.refuel_depots();
    for (auto& r : rs.routes) {
      RouteSeq with{r.front()};
      for (std::size_t p = 1; p < r.size(); ++p) {
        if (inst.is_target(r[p - 1]) && inst.is_target(r[p]) && !spare.empty() && rng.below(2) == 0) {
          with.push_back(spare.back());
          spare.pop_back();
        }
        with.push_back(r[p]);
      }
      r = with;
    }
    const auto x = edge_indicator(rs, inst.vertex_count());
    CHECK(from_edge_indicator(x, inst) == canonical(rs));
  }
}

TEST_CASE("normalization drops repeated depot visits") {
  CHECK(normalize_route({0, 5, 1, 1, 6, 0}) == RouteSeq{0, 5, 1, 6, 0});
  CHECK(normalize_route({0, 5, 0}) == RouteSeq{0, 5, 0});
}

TEST_CASE("canonical order and tie-break") {
  const RouteSet a{{{0, 7, 0}, {0, 5, 6, 0}}};
  CHECK(canonical(a).routes.front() == RouteSeq{0, 5, 6, 0});
  const RouteSet b{{{0, 6, 5, 0}, {0, 7, 0}}};
  CHECK(better_solution(10.0, a, 10.0 + 1e-12, b));
  CHECK_FALSE(better_solution(10.0 + 1e-12, b, 10.0, a));
  CHECK(better_solution(9.0, b, 10.0, a));
}
