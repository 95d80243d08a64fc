#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcmurp/detsolve.hpp"
#include "fcmurp/heuristics.hpp"
#include "fcmurp/instgen.hpp"
#include "fcmurp/model.hpp"
#include "fcmurp/recourse.hpp"

namespace fcmurp {

struct SaaConfig {
  std::size_t N = 10;             // replications
  std::size_t M = 10;             // scenarios per replication
  std::size_t lambda_size = 1000; // out-of-sample evaluation scenarios
  std::uint64_t seed = 0;
  /// Optional explicit seed per replication (size N); otherwise derived
  /// from `seed`.
  std::vector<std::uint64_t> replication_seeds;
  FuelDistribution distribution;
  BnBConfig bnb;

  void validate() const;
};

/// Mean over values plus the sample-variance statistic
/// sum (v - mean)^2 / (count - 1) ("dispersion") and the standard error
/// sqrt(dispersion / count).
struct BoundEstimate {
  double mean = 0.0;
  double dispersion = 0.0;
  double standard_error = 0.0;
  std::vector<double> values;
  /// Sample size; kept when `values` is not stored.
  std::size_t count = 0;
  /// Every underlying solve was provably optimal.
  bool rigorous = true;
  /// Provenance of the evaluation sample; empty for sample-free estimates.
  std::string lambda_tag;
};

[[nodiscard]] BoundEstimate make_estimate(std::vector<double> values);

struct SaaSolution {
  bool feasible = false;
  RouteSet routes;
  double value = 0.0;  // route cost + probability-weighted recourse over gamma
  bool optimal = false;
  std::size_t nodes = 0;
};

/// Exact minimizer of route cost + expected recourse over the scenarios of
/// `gamma`, first-stage depot placements included. Route sets with any
/// unrecoverable scenario are rejected.
[[nodiscard]] SaaSolution solve_saa_problem(const Instance& instance, const ScenarioSet& gamma,
                                            const BnBConfig& config = {});

/// Replication k's scenario sample (stream "gamma").
[[nodiscard]] ScenarioSet sample_gamma(const Instance& instance, const QuadrantMap& qmap, const SaaConfig& config,
                                       std::size_t k);
/// Out-of-sample evaluation set (stream "lambda").
[[nodiscard]] ScenarioSet sample_lambda(const Instance& instance, const QuadrantMap& qmap, const SaaConfig& config);

struct LowerBoundResult {
  BoundEstimate estimate;
  std::vector<SaaSolution> replications;
};

[[nodiscard]] LowerBoundResult saa_lower_bound(const Instance& instance, const QuadrantMap& qmap,
                                               const SaaConfig& config);

/// Largest feasible beta of `routes` over `lambda` (0 when none is feasible).
[[nodiscard]] double max_feasible_beta(const RouteSet& routes, const ScenarioSet& lambda, const Instance& instance);

struct CandidateEvaluation {
  BoundEstimate estimate;  // over per-scenario costs route_cost + beta (or nu)
  std::size_t infeasible = 0;
};

/// Out-of-sample value of one route set: mean, dispersion and standard
/// error of route_cost + beta over `lambda`, unrecoverable scenarios
/// charged `policy.nu`.
[[nodiscard]] CandidateEvaluation evaluate_candidate(const RouteSet& routes, const ScenarioSet& lambda,
                                                     const Instance& instance, const PenaltyPolicy& policy);

struct UpperBoundResult {
  std::size_t index = 0;
  RouteSet routes;
  CandidateEvaluation evaluation;
  std::vector<CandidateEvaluation> all;
  PenaltyPolicy penalty;
};

/// Evaluates every candidate on `lambda` and returns the argmin (ties by
/// canonical route order). Without a policy, nu is derived from the largest
/// feasible beta over all candidates.
[[nodiscard]] UpperBoundResult saa_upper_bound(const std::vector<RouteSet>& candidates, const ScenarioSet& lambda,
                                               const Instance& instance,
                                               const std::optional<PenaltyPolicy>& policy = std::nullopt);

struct EvpSolution {
  RouteSet routes;
  double ev = 0.0;
  bool optimal = false;
};

/// Deterministic problem at the mean fuel. Throws std::runtime_error when
/// no feasible route set exists.
[[nodiscard]] EvpSolution solve_evp(const Instance& instance, const BnBConfig& config = {});

[[nodiscard]] CandidateEvaluation evaluate_eev(const RouteSet& evp_routes, const ScenarioSet& lambda,
                                               const Instance& instance, const PenaltyPolicy& policy);

struct SaaReport {
  std::string instance_name;
  std::optional<double> ev;
  std::optional<BoundEstimate> eev;
  std::optional<BoundEstimate> lb;
  std::optional<BoundEstimate> ub;
  std::optional<BoundEstimate> h;
  std::optional<double> vss;
  std::optional<double> vss_pct;
  std::optional<RouteSet> evp_routes;
  std::optional<RouteSet> x_star;
  std::string lambda_tag;
  double nu = 0.0;
  /// Unrecoverable Λ scenarios charged nu, per estimate.
  std::size_t eev_infeasible = 0;
  std::size_t ub_infeasible = 0;
  std::size_t h_infeasible = 0;
  /// Heuristic runs that never reached a solution feasible in every scenario.
  std::size_t heuristic_warnings = 0;
};

struct VssValue {
  double value = 0.0;
  double percent = 0.0;
};

/// VSS = EEV - min(UB, H), percent = VSS / EEV * 100. Throws
/// std::invalid_argument when EEV or both of UB and H are missing, or when
/// the estimates come from different evaluation samples.
[[nodiscard]] VssValue compute_vss(const SaaReport& report);

struct PipelineConfig {
  SaaConfig saa;
  bool run_saa = false;
  bool run_heuristic = false;
  std::optional<TabuParams> tabu;  // defaults for the instance size when empty
  std::string instance_name;
};

/// Wall-clock seconds per pipeline stage.
struct PipelineTimings {
  double evp = 0.0;
  double eev = 0.0;
  double saa = 0.0;
  double heuristic = 0.0;
};

/// EVP, Λ sampling, EEV, then the requested SAA and/or heuristic estimates
/// and VSS. A single nu, derived from the EVP solution's largest feasible
/// beta on Λ, prices unrecoverable scenarios for every estimate.
[[nodiscard]] SaaReport run_pipeline(const Instance& instance, const QuadrantMap& qmap,
                                     const PipelineConfig& config, PipelineTimings* timings = nullptr);

}  // namespace fcmurp
