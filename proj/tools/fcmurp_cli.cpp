// Command-line driver: instance generation, scenario sampling, solving,
// out-of-sample evaluation and report tables.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fcmurp/detsolve.hpp"
#include "fcmurp/heuristics.hpp"
#include "fcmurp/instgen.hpp"
#include "fcmurp/io.hpp"
#include "fcmurp/model.hpp"
#include "fcmurp/parallel.hpp"
#include "fcmurp/recourse.hpp"
#include "fcmurp/rng.hpp"
#include "fcmurp/stochsolve.hpp"

namespace fs = std::filesystem;
using namespace fcmurp;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitArtifact = 3;
constexpr int kExitInfeasible = 4;
constexpr std::size_t kSaaTargetLimit = 8;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("FCMURP_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError("FCMURP_SEED is not an unsigned integer");
    }
  }
  return flag;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Instance load_instance(const fs::path& dir) {
  const fs::path p = dir / "instance.json";
  if (!fs::exists(p)) throw io::ArtifactError("missing " + p.string());
  auto inst = io::instance_from_json(io::read_file(p));
  const auto v = validate_instance(inst);
  for (const auto& issue : v.issues) {
    if (!issue.fatal) {
      std::cerr << "warning: " << issue.message << "\n";
    } else {
      throw io::ArtifactError("invalid instance: " + issue.message);
    }
  }
  return inst;
}

io::QuadrantDocument load_quadrants(const fs::path& dir, const Instance& inst) {
  const fs::path p = dir / "quadrants.json";
  if (!fs::exists(p)) throw io::ArtifactError("missing " + p.string());
  auto q = io::quadrants_from_json(io::read_file(p));
  if (q.map.vertex_labels.size() != inst.vertex_count()) {
    throw io::ArtifactError("quadrant labels do not match the instance");
  }
  return q;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::uint64_t seed = 0;
  std::size_t targets = 10;
  std::size_t vehicles = 3;
  std::size_t refuel_depots = 4;
  double fuel_factor = 2.25;
  double grid = 100.0;
  double gamma_shape = 4.0;
  double gamma_scale_ratio = 0.25;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  GenConfig cfg;
  cfg.seed = effective_seed(a.seed);
  cfg.n_targets = a.targets;
  cfg.vehicles = a.vehicles;
  cfg.n_refuel_depots = a.refuel_depots;
  cfg.fuel_factor = a.fuel_factor;
  cfg.grid = a.grid;
  cfg.gamma_shape = a.gamma_shape;
  cfg.gamma_scale_ratio = a.gamma_scale_ratio;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Instance inst = [&] {
    try {
      return generate_instance(cfg);
    } catch (const std::runtime_error& e) {
      throw InfeasibleError(e.what());
    }
  }();
  io::QuadrantDocument q;
  q.map = assign_quadrants(inst, cfg.grid, cfg.seed);
  q.distribution.shape = cfg.gamma_shape;
  q.distribution.scale_ratio = cfg.gamma_scale_ratio;
  const fs::path dir(a.out);
  io::write_atomic(dir / "instance.json", io::instance_to_json(inst));
  io::write_atomic(dir / "quadrants.json", io::quadrants_to_json(q));
  std::cout << std::setprecision(17) << "lambda " << inst.lambda() << "\nF " << inst.fuel_capacity() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ScenarioArgs {
  std::string dir;
  std::uint64_t seed = 0;
  std::size_t count = 10;
  std::string stream = "scenarios";
  std::string out;
};

int cmd_scenarios(const ScenarioArgs& a) {
  const auto inst = load_instance(a.dir);
  const auto q = load_quadrants(a.dir, inst);
  if (a.count == 0) throw UsageError("--count must be positive");
  const auto set = sample_scenarios(inst, q.map, effective_seed(a.seed), a.count, q.distribution, a.stream);
  io::write_atomic(a.out.empty() ? fs::path(a.dir) / "scenarios.json" : fs::path(a.out), io::scenarios_to_json(set));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string dir;
  std::string mode = "evp";
  std::string name;
  std::uint64_t seed = 0;
  std::size_t n = 10;
  std::size_t m = 10;
  std::size_t lambda = 1000;
  std::optional<std::size_t> theta;
  std::optional<std::size_t> tau;
  std::optional<std::size_t> tenure;
  std::size_t node_limit = BnBConfig{}.node_limit;
  double time_limit = BnBConfig{}.time_limit_seconds;
  std::size_t exact_limit = BnBConfig{}.exact_target_limit;
};

int cmd_solve(const SolveArgs& a) {
  const auto started = utc_now();
  const auto inst = load_instance(a.dir);
  const auto q = load_quadrants(a.dir, inst);
  if (a.mode == "saa" && inst.target_count() > kSaaTargetLimit) {
    throw UsageError("mode saa solves every replication exactly and is limited to " +
                     std::to_string(kSaaTargetLimit) + " targets; use --mode heuristic for this instance");
  }

  PipelineConfig cfg;
  cfg.instance_name = a.name.empty() ? fs::absolute(a.dir).lexically_normal().filename().string() : a.name;
  if (cfg.instance_name.empty()) cfg.instance_name = fs::absolute(a.dir).parent_path().filename().string();
  cfg.saa.N = a.n;
  cfg.saa.M = a.m;
  cfg.saa.lambda_size = a.lambda;
  cfg.saa.seed = effective_seed(a.seed);
  cfg.saa.distribution = q.distribution;
  cfg.saa.bnb.node_limit = a.node_limit;
  cfg.saa.bnb.time_limit_seconds = a.time_limit;
  cfg.saa.bnb.exact_target_limit = a.exact_limit;
  cfg.run_saa = a.mode == "saa";
  cfg.run_heuristic = a.mode == "heuristic";
  TabuParams tabu = TabuParams::defaults(inst.target_count());
  if (a.theta) tabu.theta = *a.theta;
  if (a.tau) tabu.tau = *a.tau;
  if (a.tenure) tabu.tenure = *a.tenure;
  try {
    cfg.saa.validate();
    if (cfg.run_heuristic) tabu.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.tabu = tabu;

  std::cerr << "solving " << cfg.instance_name << " (mode " << a.mode << ", n " << inst.target_count() << ")\n";
  PipelineTimings timings;
  SaaReport report;
  try {
    report = run_pipeline(inst, q.map, cfg, &timings);
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.find("feasible") != std::string::npos) throw InfeasibleError(what);
    throw;
  }
  std::cerr << "  EVP " << timings.evp << " s, EEV " << timings.eev << " s";
  if (cfg.run_saa) std::cerr << ", SAA " << timings.saa << " s";
  if (cfg.run_heuristic) std::cerr << ", heuristic " << timings.heuristic << " s";
  std::cerr << "\n";

  const fs::path dir(a.dir);
  io::write_atomic(dir / ("report_" + a.mode + ".json"), io::report_to_json(report));
  const RouteSet& chosen = report.x_star ? *report.x_star : *report.evp_routes;
  io::write_atomic(dir / ("solution_" + a.mode + ".json"), io::solution_to_json(chosen, route_cost(chosen, inst)));

  nlohmann::json manifest{
      {"format_version", io::kFormatVersion},
      {"kind", "manifest"},
      {"tool_version", kVersion},
      {"command", "solve"},
      {"config",
       {{"mode", a.mode},
        {"instance", cfg.instance_name},
        {"N", a.n},
        {"M", a.m},
        {"lambda_size", a.lambda},
        {"theta", tabu.theta},
        {"tau", tabu.tau},
        {"tenure", tabu.tenure},
        {"node_limit", a.node_limit},
        {"time_limit_seconds", a.time_limit},
        {"exact_target_limit", a.exact_limit},
        {"threads", thread_count()}}},
      {"seeds",
       {{"master", cfg.saa.seed},
        {"lambda", derive_seed(cfg.saa.seed, "lambda")},
        {"gamma", [&] {
           std::vector<std::uint64_t> s;
           for (std::size_t k = 0; k < a.n; ++k) s.push_back(derive_seed(cfg.saa.seed, "gamma", k));
           return s;
         }()}}},
      {"started", started},
      {"finished", utc_now()},
      {"wall_clock_seconds",
       {{"evp", timings.evp}, {"eev", timings.eev}, {"saa", timings.saa}, {"heuristic", timings.heuristic}}}};
  io::write_atomic(dir / ("manifest_" + a.mode + ".json"), manifest.dump(1) + "\n");

  std::cout << io::csv_header() << "\n" << io::csv_row(report) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string dir;
  std::string solution;
  std::uint64_t seed = 0;
  std::size_t lambda = 1000;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto inst = load_instance(a.dir);
  const auto q = load_quadrants(a.dir, inst);
  if (!fs::exists(a.solution)) throw io::ArtifactError("missing " + a.solution);
  const auto routes = io::solution_from_json(io::read_file(a.solution));
  try {
    check_structure(routes, inst);
  } catch (const StructuralError& e) {
    throw io::ArtifactError(std::string("invalid solution: ") + e.what());
  }
  if (!nominal_feasibility(routes, inst).feasible) throw io::ArtifactError("solution violates the nominal fuel limit");
  SaaConfig cfg;
  cfg.seed = effective_seed(a.seed);
  cfg.lambda_size = a.lambda;
  cfg.distribution = q.distribution;
  if (a.lambda == 0) throw UsageError("--lambda must be positive");
  const auto lambda = sample_lambda(inst, q.map, cfg);
  const auto evp = solve_evp(inst, cfg.bnb);
  const auto policy = make_penalty(inst, max_feasible_beta(evp.routes, lambda, inst));
  const auto ev = evaluate_candidate(routes, lambda, inst, policy);
  nlohmann::json out{{"route_cost", route_cost(routes, inst)},
                     {"mean", ev.estimate.mean},
                     {"dispersion", ev.estimate.dispersion},
                     {"standard_error", ev.estimate.standard_error},
                     {"penalized_scenarios", ev.infeasible},
                     {"nu", policy.nu},
                     {"lambda_tag", lambda.tag}};
  std::cout << out.dump(1) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> dirs;
  std::string format = "csv";
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::vector<SaaReport> rows;
  for (const auto& d : a.dirs) {
    std::optional<SaaReport> merged;
    for (const char* mode : {"saa", "heuristic", "evp"}) {
      const fs::path p = fs::path(d) / (std::string("report_") + mode + ".json");
      if (!fs::exists(p)) continue;
      auto r = io::report_from_json(io::read_file(p));
      merged = merged ? io::merge_reports(*merged, r) : r;
    }
    if (!merged) throw io::ArtifactError("no report files in " + d);
    rows.push_back(*merged);
  }
  std::ostringstream out;
  if (a.format == "csv") {
    out << io::csv_header() << "\n";
    for (const auto& r : rows) out << io::csv_row(r) << "\n";
  } else {
    out << io::text_table(rows);
  }
  if (a.out.empty()) {
    std::cout << out.str();
  } else {
    io::write_atomic(a.out, out.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_selftest(std::size_t cases, std::uint64_t seed) {
  std::size_t agree = 0;
  std::size_t total = 0;
  Rng rng(effective_seed(seed));
  for (std::size_t c = 0; c < cases; ++c) {
    GenConfig g;
    g.seed = derive_seed(seed, "selftest", c);
    g.n_targets = 3 + rng.below(5);
    g.vehicles = 1 + rng.below(2);
    g.fuel_factor = 1.6 + rng.uniform();
    Instance inst = [&] {
      try {
        return generate_instance(g);
      } catch (const std::runtime_error&) {
        g.fuel_factor = 2.25;
        return generate_instance(g);
      }
    }();
    auto sol = solve_deterministic_greedy(DetProblem(inst));
    if (!sol.feasible) continue;
    std::size_t edges = 0;
    for (const auto& r : sol.routes.routes) edges += r.size() - 1;
    if (edges > kOracleEdgeCap) continue;
    const auto qmap = assign_quadrants(inst, g.grid, g.seed);
    const auto set = sample_scenarios(inst, qmap, g.seed, 1);
    const auto table = precompute_best_depot(inst, set.scenarios[0]);
    const auto fast = evaluate_recourse(sol.routes, set.scenarios[0], table, inst);
    const auto slow = recourse_oracle(sol.routes, set.scenarios[0], table, inst);
    ++total;
    if (fast.feasible == slow.feasible && fast.beta == slow.beta) ++agree;
  }
  const bool pass = total > 0 && agree == total;
  std::cout << (pass ? "PASS" : "FAIL") << " recourse oracle equivalence " << agree << "/" << total << "\n";
  return pass ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuel-constrained multi-UAV routing under uncertain fuel burn"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = logical cores)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a random instance and its quadrant labels");
  g->add_option("--seed", gen.seed, "Master seed (FCMURP_SEED overrides)");
  g->add_option("--targets", gen.targets, "Number of targets")->check(CLI::PositiveNumber);
  g->add_option("--vehicles", gen.vehicles, "Number of vehicles")->check(CLI::PositiveNumber);
  g->add_option("--refuel-depots", gen.refuel_depots, "Refuel depots (0-4)")->check(CLI::Range(0, 4));
  g->add_option("--fuel-factor", gen.fuel_factor, "Fuel capacity as a multiple of lambda")
      ->check(CLI::PositiveNumber);
  g->add_option("--grid", gen.grid, "Side of the square region")->check(CLI::PositiveNumber);
  g->add_option("--gamma-shape", gen.gamma_shape, "Gamma shape of the fuel distribution")
      ->check(CLI::PositiveNumber);
  g->add_option("--gamma-scale-ratio", gen.gamma_scale_ratio, "Gamma scale as a fraction of the nominal fuel")
      ->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "Output directory")->required();

  ScenarioArgs sc;
  auto* s = app.add_subcommand("scenarios", "Sample a scenario set for an instance");
  s->add_option("--dir", sc.dir, "Directory holding instance.json and quadrants.json")->required();
  s->add_option("--seed", sc.seed, "Seed (FCMURP_SEED overrides)");
  s->add_option("--count", sc.count, "Number of scenarios")->check(CLI::PositiveNumber);
  s->add_option("--stream", sc.stream, "Substream label");
  s->add_option("--out", sc.out, "Output file (default <dir>/scenarios.json)");

  SolveArgs sv;
  auto* v = app.add_subcommand("solve", "Solve an instance and write report, solution and manifest files");
  v->add_option("--dir", sv.dir, "Run directory holding instance.json and quadrants.json")->required();
  v->add_option("--mode", sv.mode, "evp, saa or heuristic")->check(CLI::IsMember({"evp", "saa", "heuristic"}));
  v->add_option("--name", sv.name, "Instance name in reports (default: directory name)");
  v->add_option("--seed", sv.seed, "Master seed (FCMURP_SEED overrides)");
  v->add_option("--n", sv.n, "Replications N")->check(CLI::Range(2, 1000000));
  v->add_option("--m", sv.m, "Scenarios per replication")->check(CLI::PositiveNumber);
  v->add_option("--lambda", sv.lambda, "Evaluation scenarios")->check(CLI::PositiveNumber);
  v->add_option("--theta", sv.theta, "Tabu iteration limit");
  v->add_option("--tau", sv.tau, "Tabu stagnation limit");
  v->add_option("--tenure", sv.tenure, "Tabu tenure");
  v->add_option("--node-limit", sv.node_limit, "Branch-and-bound node limit");
  v->add_option("--time-limit", sv.time_limit, "Branch-and-bound time limit per solve (s)");
  v->add_option("--exact-limit", sv.exact_limit, "Largest target count solved exactly in deterministic subproblems");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Out-of-sample value of a solution file");
  e->add_option("--dir", ev.dir, "Directory holding instance.json and quadrants.json")->required();
  e->add_option("--solution", ev.solution, "Solution file")->required();
  e->add_option("--seed", ev.seed, "Master seed (FCMURP_SEED overrides)");
  e->add_option("--lambda", ev.lambda, "Evaluation scenarios")->check(CLI::PositiveNumber);

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "Table of EV, EEV, LB, UB, H and VSS per run directory");
  r->add_option("--dir", rp.dirs, "Run directories (repeatable)")->required();
  r->add_option("--format", rp.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  r->add_option("--out", rp.out, "Output file (default stdout)");

  std::size_t selftest_cases = 200;
  std::uint64_t selftest_seed = 1;
  auto* t = app.add_subcommand("selftest", "Check the recourse solver against brute-force enumeration");
  t->add_option("--cases", selftest_cases, "Number of random cases")->check(CLI::PositiveNumber);
  t->add_option("--seed", selftest_seed, "Seed (FCMURP_SEED overrides)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  set_thread_count(threads);

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_scenarios(sc);
    if (*v) return cmd_solve(sv);
    if (*e) return cmd_evaluate(ev);
    if (*r) return cmd_report(rp);
    if (*t) return cmd_selftest(selftest_cases, selftest_seed);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const io::ArtifactError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitArtifact;
  } catch (const InfeasibleError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitOk;
}
