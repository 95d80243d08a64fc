#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "fcmurp/instgen.hpp"
#include "fcmurp/parallel.hpp"
#include "support.hpp"

using namespace fcmurp;

TEST_CASE("generation is a function of the seed") {
  GenConfig g;
  g.seed = 99;
  g.n_targets = 12;
  const auto a = generate_instance(g);
  const auto b = generate_instance(g);
  CHECK(a.coordinates().size() == b.coordinates().size());
  for (std::size_t v = 0; v < a.vertex_count(); ++v) {
    CHECK(a.coordinates()[v].x == b.coordinates()[v].x);
    CHECK(a.coordinates()[v].y == b.coordinates()[v].y);
  }
  CHECK(a.cost() == b.cost());
  CHECK(a.fuel_capacity() == b.fuel_capacity());
  g.seed = 100;
  CHECK_FALSE(generate_instance(g).cost() == a.cost());
}

TEST_CASE("layout, fuel capacity and lambda") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GenConfig g;
    g.seed = seed;
    g.n_targets = 9;
    const auto inst = generate_instance(g);
    CHECK(validate_instance(inst).ok());
    CHECK(inst.home_depot() == 0);
    CHECK(inst.refuel_depots() == std::vector<VertexId>{1, 2, 3, 4});
    CHECK(inst.coordinates()[0].x == 50.0);
    CHECK(inst.coordinates()[0].y == 50.0);
    double lambda = 0.0;
    for (VertexId d : inst.depots()) {
      for (VertexId t : inst.targets()) {
        const double dx = inst.coordinates()[d].x - inst.coordinates()[t].x;
        const double dy = inst.coordinates()[d].y - inst.coordinates()[t].y;
        lambda = std::max(lambda, std::sqrt(dx * dx + dy * dy));
      }
    }
    CHECK(inst.lambda() == doctest::Approx(lambda).epsilon(1e-14));
    CHECK(inst.fuel_capacity() == doctest::Approx(2.25 * inst.lambda()).epsilon(1e-15));
    for (VertexId t : inst.targets()) {
      const auto& p = inst.coordinates()[t];
      CHECK_UNARY(p.x >= 0.0);
      CHECK_UNARY(p.x <= 100.0);
      CHECK_UNARY(p.y >= 0.0);
      CHECK_UNARY(p.y <= 100.0);
    }
    CHECK(inst.nominal_fuel() == inst.cost());
  }
}

TEST_CASE("fixed depot positions") {
  const auto p = fixed_depot_positions(4, 100.0);
  REQUIRE(p.size() == 5);
  std::vector<std::pair<double, double>> got;
  for (std::size_t k = 1; k < p.size(); ++k) got.emplace_back(p[k].x, p[k].y);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::pair<double, double>>{{25, 25}, {25, 75}, {75, 25}, {75, 75}});
}

TEST_CASE("invalid configurations are rejected") {
  GenConfig g;
  g.n_targets = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = {};
  g.fuel_factor = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = {};
  g.gamma_shape = -1.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = {};
  g.fuel_factor = 0.2;  // no target can be reached
  CHECK_THROWS((void)generate_instance(g));
}

TEST_CASE("quadrant_of puts midlines in the upper/right quadrant") {
  CHECK(quadrant_of({10, 10}, 100) == 0);
  CHECK(quadrant_of({60, 10}, 100) == 1);
  CHECK(quadrant_of({10, 60}, 100) == 2);
  CHECK(quadrant_of({60, 60}, 100) == 3);
  CHECK(quadrant_of({50, 50}, 100) == 3);
  CHECK(quadrant_of({50, 10}, 100) == 1);
}

TEST_CASE("quadrant labels: counts, determinism and frequencies") {
  const auto inst = testing::generated(1, 6, 2);
  std::array<int, 4> congested{};
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    const auto q = assign_quadrants(inst, 100.0, static_cast<std::uint64_t>(s));
    const auto c = std::count(q.quadrants.begin(), q.quadrants.end(), QuadrantLabel::congested);
    const auto sp = std::count(q.quadrants.begin(), q.quadrants.end(), QuadrantLabel::sparse);
    const auto m = std::count(q.quadrants.begin(), q.quadrants.end(), QuadrantLabel::mean);
    REQUIRE(c == 1);
    REQUIRE(sp == 1);
    REQUIRE(m == 2);
    for (std::size_t k = 0; k < 4; ++k) congested[k] += q.quadrants[k] == QuadrantLabel::congested;
    if (s < 50) {
      CHECK(assign_quadrants(inst, 100.0, static_cast<std::uint64_t>(s)) == q);
      for (VertexId v = 0; v < inst.vertex_count(); ++v) {
        CHECK(q.vertex_labels[v] == q.quadrants[quadrant_of(inst.coordinates()[v], 100.0)]);
      }
    }
  }
  for (int c : congested) {
    CHECK(static_cast<double>(c) / seeds == doctest::Approx(0.25).epsilon(0.08));
  }
}

TEST_CASE("scenario draws respect the quadrant rule") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = testing::generated(seed, 10, 3);
    const auto q = assign_quadrants(inst, 100.0, seed + 1000);
    const auto set = sample_scenarios(inst, q, seed, 10);
    REQUIRE(set.size() == 10);
    CHECK(set.total_probability() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(validate_instance(inst, &set).ok());
    std::size_t above = 0, below = 0;
    for (const auto& s : set.scenarios) {
      CHECK(s.probability == doctest::Approx(0.1));
      for (VertexId i = 0; i < inst.vertex_count(); ++i) {
        for (VertexId j = 0; j < inst.vertex_count(); ++j) {
          if (i == j) continue;
          const double e = inst.nominal_fuel(i, j);
          const auto li = q.vertex_labels[i];
          const auto lj = q.vertex_labels[j];
          if (li == QuadrantLabel::congested || lj == QuadrantLabel::congested) {
            CHECK_UNARY(s.fuel(i, j) >= e);
            above += s.fuel(i, j) > e;
          } else if (li == QuadrantLabel::sparse || lj == QuadrantLabel::sparse) {
            CHECK_UNARY(s.fuel(i, j) <= e);
            below += s.fuel(i, j) < e;
          } else {
            CHECK(s.fuel(i, j) == e);
          }
        }
      }
    }
    CHECK(above > 0);
    CHECK(below > 0);
  }
}

TEST_CASE("scenario sampling does not depend on the worker count") {
  const auto inst = testing::generated(3, 10, 3);
  const auto q = assign_quadrants(inst, 100.0, 3);
  set_thread_count(1);
  const auto a = sample_scenarios(inst, q, 17, 12);
  set_thread_count(4);
  const auto b = sample_scenarios(inst, q, 17, 12);
  set_thread_count(0);
  REQUIRE(a.size() == b.size());
  for (std::size_t s = 0; s < a.size(); ++s) CHECK(a.scenarios[s].fuel == b.scenarios[s].fuel);
  // Substream k does not depend on how many scenarios are drawn.
  const auto c = sample_scenarios(inst, q, 17, 3);
  for (std::size_t s = 0; s < c.size(); ++s) CHECK(c.scenarios[s].fuel == a.scenarios[s].fuel);
  CHECK_FALSE(sample_scenarios(inst, q, 17, 1, {}, "other").scenarios[0].fuel == a.scenarios[0].fuel);
}

TEST_CASE("point mass reproduces the mean") {
  const auto inst = testing::generated(4, 6, 2);
  const auto q = assign_quadrants(inst, 100.0, 4);
  FuelDistribution pm;
  pm.kind = FuelDistribution::Kind::point_mass;
  const auto set = sample_scenarios(inst, q, 1, 3, pm);
  for (const auto& s : set.scenarios) CHECK(s.fuel == inst.nominal_fuel());
  const auto nom = nominal_scenario_set(inst);
  REQUIRE(nom.size() == 1);
  CHECK(nom.scenarios[0].probability == 1.0);
  CHECK(nom.scenarios[0].fuel == inst.nominal_fuel());
}
