// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fcmurp/detsolve.hpp"
#include "fcmurp/heuristics.hpp"
#include "fcmurp/instgen.hpp"
#include "fcmurp/io.hpp"
#include "fcmurp/parallel.hpp"
#include "fcmurp/recourse.hpp"
#include "fcmurp/stochsolve.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fcmurp;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int k, const std::string& title, const std::function<Outcome()>& run) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = seconds_since(t0);
  std::printf("%s criterion %d: %s | %s | %.1f s\n", o.pass ? "PASS" : "FAIL", k, title.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Small instances shared by criteria 2 and 3.
std::vector<Instance> small_instances() {
  std::vector<Instance> out;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const std::size_t n = 4 + k % 3;
    const std::size_t m = 1 + (k / 3) % 2;
    out.push_back(testing::generated(1000 + k, n, m, 1.3 + 0.1 * static_cast<double>(k % 10)));
  }
  return out;
}

Outcome recourse_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(31337);
  std::size_t equal = 0, total = 0, detoured = 0, infeasible = 0;
  for (std::uint64_t k = 0; total < 200; ++k) {
    const std::size_t m = 1 + k % 2;
    const std::size_t n = std::min<std::size_t>(3 + k % 8, 9 * m);
    const auto inst = testing::generated(k, n, m, 1.2 + 0.1 * static_cast<double>(k % 9));
    const auto q = assign_quadrants(inst, 100.0, k);
    const auto s = sample_scenarios(inst, q, k, 1).scenarios[0];
    const auto x = testing::random_routes(inst, rng);
    bool short_enough = true;
    for (const auto& r : x.routes) short_enough = short_enough && r.size() - 1 <= 10;
    if (!short_enough) continue;
    const auto table = precompute_best_depot(inst, s);
    const auto a = evaluate_recourse(x, s, table, inst);
    const auto b = recourse_oracle(x, s, table, inst);
    ++total;
    const bool same = a.feasible == b.feasible && (!a.feasible || a.beta == b.beta);
    equal += same;
    detoured += a.feasible && !a.detours.empty();
    infeasible += !a.feasible;
  }
  const double secs = seconds_since(t0);
  return {equal == 200 && secs < 30.0, fmt("%zu/200 identical (%zu with detours, %zu unrecoverable)", equal,
                                           detoured, infeasible)};
}

Outcome deterministic_exactness(const std::vector<Instance>& instances) {
  const auto t0 = Clock::now();
  std::size_t ok = 0;
  for (const auto& inst : instances) {
    const auto got = solve_deterministic_exact(DetProblem(inst));
    const auto ref = oracle::deterministic_optimum(inst, inst.cost(), inst.nominal_fuel());
    if (got.feasible != ref.feasible) continue;
    if (!got.feasible) {
      ++ok;
      continue;
    }
    if (got.optimal && std::abs(got.cost - ref.value) <= 1e-6 && canonical(got.routes) == ref.routes) ++ok;
  }
  const double secs = seconds_since(t0);
  return {ok == instances.size() && secs < 120.0, fmt("%zu/%zu match enumeration", ok, instances.size())};
}

Outcome pruning_safety(const std::vector<Instance>& instances) {
  std::size_t ok = 0;
  for (const auto& inst : instances) {
    BnBConfig off;
    off.strengthened_pruning = false;
    const auto a = solve_deterministic_exact(DetProblem(inst));
    const auto b = solve_deterministic_exact(DetProblem(inst), off);
    ok += a.feasible == b.feasible && (!a.feasible || std::abs(a.cost - b.cost) <= 1e-6);
  }
  return {ok == instances.size(), fmt("%zu/%zu equal optimal costs", ok, instances.size())};
}

Outcome bound_ordering() {
  const auto t0 = Clock::now();
  std::size_t ok = 0;
  std::string values;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const std::uint64_t seed = 4000 + k;
    const auto inst = testing::generated(seed, 6, 3);
    const auto q = assign_quadrants(inst, 100.0, seed);
    PipelineConfig cfg;
    cfg.saa.N = 5;
    cfg.saa.M = 3;
    cfg.saa.lambda_size = 200;
    cfg.saa.seed = seed;
    cfg.run_saa = true;
    const auto rep = run_pipeline(inst, q, cfg);
    const double se = std::sqrt(rep.lb->standard_error * rep.lb->standard_error +
                                rep.ub->standard_error * rep.ub->standard_error);
    const bool holds = rep.lb->mean <= rep.ub->mean + 2.0 * se;
    ok += holds;
    values += fmt(" [LB %.2f UB %.2f se %.2f%s]", rep.lb->mean, rep.ub->mean, se, rep.lb->rigorous ? "" : " non-rigorous");
  }
  const double secs = seconds_since(t0);
  return {ok >= 4 && secs < 600.0, fmt("%zu/5 ordered;", ok) + values};
}

Outcome vss_trend() {
  const auto t0 = Clock::now();
  std::size_t below = 0;
  double pct_sum = 0.0;
  std::string values;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const std::uint64_t seed = 5000 + k;
    const std::size_t n = k < 5 ? 8 : 10;
    const auto inst = testing::generated(seed, n, 3, 2.25);
    const auto q = assign_quadrants(inst, 100.0, seed);
    PipelineConfig cfg;
    cfg.saa.seed = seed;
    cfg.run_heuristic = true;
    const auto rep = run_pipeline(inst, q, cfg);
    below += rep.h->mean <= rep.eev->mean;
    pct_sum += *rep.vss_pct;
    values += fmt(" %.2f", *rep.vss_pct);
  }
  const double mean_pct = pct_sum / 10.0;
  const double secs = seconds_since(t0);
  return {below >= 8 && mean_pct > 0.0 && secs < 900.0,
          fmt("H <= EEV on %zu/10, mean VSS%% %.3f; per instance:", below, mean_pct) + values};
}

Outcome gamma_moments() {
  const double E = 40.0;
  Rng rng(derive_seed(6, "moments"));
  const int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(4.0, 0.25 * E);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sum2 - n * mean * mean) / (n - 1));
  const double mean_err = std::abs(mean - E) / E;
  const double sd_err = std::abs(sd - 0.5 * E) / (0.5 * E);
  return {mean_err < 0.01 && sd_err < 0.03,
          fmt("mean %.4f (err %.3f%%), sd %.4f (err %.3f%%)", mean, 100 * mean_err, sd, 100 * sd_err)};
}

Outcome tabu_discipline() {
  std::size_t ok = 0;
  double slowest = 0.0;
  std::size_t violations = 0;
  for (std::uint64_t k = 0; k < 30; ++k) {
    const std::uint64_t seed = 7000 + k;
    const auto inst = testing::generated(seed, 20, 3);
    const auto q = assign_quadrants(inst, 100.0, seed);
    const auto delta = sample_scenarios(inst, q, seed, 10);
    const auto t0 = Clock::now();
    const auto params = TabuParams::defaults(20);
    const auto res = run_heuristic(inst, delta, BnBConfig{}, params);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    const auto v = oracle::tabu_violations(res.tabu.log, params.tenure, res.tabu.initial_objective.value);
    violations += v;
    const bool good = v == 0 && nominal_feasibility(res.tabu.best, inst).feasible &&
                      res.tabu.best_objective.value <= res.tabu.initial_objective.value && secs < 60.0;
    ok += good;
  }
  return {ok == 30, fmt("%zu/30 runs clean, %zu log violations, slowest %.2f s", ok, violations, slowest)};
}

Outcome construction_formula() {
  const auto inst = testing::generated(8000, 6, 2);
  const auto q = assign_quadrants(inst, 100.0, 8000);
  auto delta = sample_scenarios(inst, q, 8000, 3);
  delta.scenarios[0].probability = 0.25;
  delta.scenarios[1].probability = 0.45;
  delta.scenarios[2].probability = 0.30;
  const auto res = construct(inst, delta);
  const auto ref = oracle::construction_weights(inst, delta, res.per_scenario);
  double worst = 0.0;
  for (std::size_t i = 0; i < inst.vertex_count(); ++i) {
    for (std::size_t j = 0; j < inst.vertex_count(); ++j) {
      if (i == j) continue;
      worst = std::max({worst, std::abs(res.weights.d(i, j) - ref.d(i, j)),
                        std::abs(res.weights.c_bar(i, j) - ref.c_bar(i, j)),
                        std::abs(res.weights.f_bar(i, j) - ref.f_bar(i, j))});
    }
  }
  std::size_t solved = 0;
  for (const auto& s : res.per_scenario) solved += s.has_value();
  return {worst <= 1e-9 && solved == 3, fmt("max deviation %.3g over d, c_bar, f_bar (%zu/3 scenarios solved)", worst, solved)};
}

Outcome determinism() {
  const auto inst = testing::generated(9000, 6, 2);
  const auto q = assign_quadrants(inst, 100.0, 9000);
  PipelineConfig cfg;
  cfg.saa.N = 3;
  cfg.saa.M = 3;
  cfg.saa.lambda_size = 100;
  cfg.saa.seed = 9000;
  cfg.run_saa = true;
  cfg.run_heuristic = true;
  cfg.instance_name = "determinism";
  const auto dir = std::filesystem::temp_directory_path() / "fcmurp_acceptance";
  std::filesystem::remove_all(dir);
  std::vector<std::string> bytes;
  for (std::size_t threads : {1u, 1u, 4u}) {
    set_thread_count(threads);
    const auto path = dir / ("report_" + std::to_string(bytes.size()) + ".json");
    io::write_atomic(path, io::report_to_json(run_pipeline(inst, q, cfg)));
    bytes.push_back(io::read_file(path));
  }
  set_thread_count(0);
  std::filesystem::remove_all(dir);
  const bool same = bytes[0] == bytes[1] && bytes[1] == bytes[2];
  return {same, fmt("3 runs (1, 1, 4 threads), %zu bytes each, %s", bytes[0].size(), same ? "identical" : "differ")};
}

}  // namespace

int main() {
  const auto small = small_instances();
  report(1, "recourse DP equals brute force", recourse_equivalence);
  report(2, "exact solver equals enumeration", [&] { return deterministic_exactness(small); });
  report(3, "strengthened pruning keeps optima", [&] { return pruning_safety(small); });
  report(4, "LB <= UB + 2 combined SE", bound_ordering);
  report(5, "H <= EEV majority and positive mean VSS", vss_trend);
  report(6, "gamma sampler moments", gamma_moments);
  report(7, "tabu discipline at n=20", tabu_discipline);
  report(8, "construction weights", construction_formula);
  report(9, "byte-identical reports", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
