#include "fcmurp/stochsolve.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fcmurp/parallel.hpp"
#include "fcmurp/rng.hpp"
#include "search_support.hpp"

namespace fcmurp {

using namespace detail;

void SaaConfig::validate() const {
  if (N < 2) throw std::invalid_argument("at least two replications are required");
  if (M < 1) throw std::invalid_argument("each replication needs at least one scenario");
  if (lambda_size < 1) throw std::invalid_argument("the evaluation sample needs at least one scenario");
  if (!replication_seeds.empty() && replication_seeds.size() != N) {
    throw std::invalid_argument("explicit replication seeds must match the replication count");
  }
}

BoundEstimate make_estimate(std::vector<double> values) {
  BoundEstimate e;
  e.values = std::move(values);
  const std::size_t n = e.values.size();
  e.count = n;
  if (n == 0) return e;
  double sum = 0.0;
  for (double v : e.values) sum += v;
  e.mean = sum / static_cast<double>(n);
  if (n >= 2) {
    double sq = 0.0;
    for (double v : e.values) sq += (v - e.mean) * (v - e.mean);
    e.dispersion = sq / static_cast<double>(n - 1);
    e.standard_error = std::sqrt(e.dispersion / static_cast<double>(n));
  }
  return e;
}

namespace {

struct RouteChoice {
  bool feasible = false;
  double value = 0.0;
  RouteSeq route;
};

/// Branch-and-bound over target assignment and order; each finished route
/// gets its best first-stage depot placement for cost + expected recourse.
class SaaSearch {
 public:
  SaaSearch(const Instance& inst, const ScenarioSet& gamma, const BnBConfig& cfg)
      : inst_(inst),
        gamma_(gamma),
        cfg_(cfg),
        pb_(inst),
        tables_(precompute_best_depots(inst, gamma)),
        bounds_(pb_),
        order_(ranked_targets(inst)),
        n_(order_.size()),
        m_(inst.vehicles()),
        cap_(inst.fuel_capacity() + kTolerance),
        use_arrival_rule_(cfg.strengthened_pruning && pb_.fuel_metric()),
        use_bound_(satisfies_triangle_inequality(inst.cost())) {
    if (n_ > 63) throw std::invalid_argument("SAA solver supports at most 63 targets");
    for (std::size_t r = 0; r < n_; ++r) {
      sum_in_ += bounds_.min_in[order_[r]];
      sum_out_ += bounds_.min_out[order_[r]];
    }
  }

  void offer(const RouteSet& routes) {
    RouteSet rs;
    double total = 0.0;
    for (const auto& r : routes.routes) {
      const auto& ch = choose(targets_of(r, inst_));
      if (!ch.feasible) return;
      total += ch.value;
      rs.routes.push_back(ch.route);
    }
    consider(canonical(rs), total);
  }

  SaaSolution run() {
    start_ = std::chrono::steady_clock::now();
    if (m_ > n_ || m_ == 0) return finish();
    for (std::size_t r = 0; r < n_ && !stopped_; ++r) {
      if (n_ - r - 1 < m_ - 1) break;
      start_route(r);
    }
    return finish();
  }

 private:
  /// Expected block value: cost plus probability-weighted recourse of a
  /// depot-to-depot block; infinity when nominally infeasible or when some
  /// scenario cannot be recovered.
  double block_value(const RouteSeq& block) {
    if (auto it = block_memo_.find(block); it != block_memo_.end()) return it->second;
    double value = kInf;
    double nominal = 0.0;
    for (std::size_t q = 0; q + 1 < block.size(); ++q) nominal += inst_.nominal_fuel(block[q], block[q + 1]);
    if (nominal <= cap_) {
      value = sequence_cost(block, inst_.cost());
      for (std::size_t s = 0; s < gamma_.size() && value < kInf; ++s) {
        const auto rr = evaluate_route_recourse(block, gamma_.scenarios[s].fuel, tables_[s], inst_);
        if (!rr.feasible) {
          value = kInf;
        } else {
          value += gamma_.scenarios[s].probability * rr.beta;
        }
      }
    }
    block_memo_.emplace(block, value);
    return value;
  }

  /// DP over first-stage depot boundaries: boundary (i, d) puts depot d
  /// before target i; (0, d0) and (L, d0) are the route ends.
  const RouteChoice& choose(const std::vector<VertexId>& seq) {
    if (auto it = route_memo_.find(seq); it != route_memo_.end()) return it->second;
    RouteChoice out;
    const std::size_t L = seq.size();
    const VertexId d0 = inst_.home_depot();
    const auto depots = inst_.depots();
    const std::size_t D = depots.size();
    // State index: 0 = start; (i, k) for 1 <= i < L -> 1 + (i-1)*D + k; end = 1 + (L-1)*D.
    const std::size_t states = 2 + (L - 1) * D;
    const std::size_t end_state = states - 1;
    std::vector<double> best(states, kInf);
    std::vector<std::size_t> parent(states, 0);
    auto pos_of = [&](std::size_t st) -> std::size_t { return st == 0 ? 0 : st == end_state ? L : 1 + (st - 1) / D; };
    auto depot_of = [&](std::size_t st) -> VertexId {
      return (st == 0 || st == end_state) ? d0 : depots[(st - 1) % D];
    };
    best[0] = 0.0;
    RouteSeq block;
    for (std::size_t st = 0; st < end_state; ++st) {
      if (best[st] == kInf) continue;
      const std::size_t i = pos_of(st);
      const VertexId d = depot_of(st);
      double prefix = inst_.nominal_fuel(d, seq[i]);
      for (std::size_t j = i + 1; j <= L && prefix <= cap_; ++j) {
        // Block d, seq[i..j-1], then a boundary before seq[j] (or the end).
        std::vector<std::size_t> next;
        if (j == L) {
          next.push_back(end_state);
        } else {
          for (std::size_t k = 0; k < D; ++k) next.push_back(1 + (j - 1) * D + k);
        }
        for (std::size_t nx : next) {
          block.assign(1, d);
          block.insert(block.end(), seq.begin() + static_cast<std::ptrdiff_t>(i),
                       seq.begin() + static_cast<std::ptrdiff_t>(j));
          block.push_back(depot_of(nx));
          const double v = block_value(block);
          if (v == kInf) continue;
          if (best[st] + v < best[nx]) {
            best[nx] = best[st] + v;
            parent[nx] = st;
          }
        }
        if (j < L) prefix += inst_.nominal_fuel(seq[j - 1], seq[j]);
      }
    }
    if (best[end_state] < kInf) {
      out.feasible = true;
      out.value = best[end_state];
      std::vector<std::size_t> chain{end_state};
      while (chain.back() != 0) chain.push_back(parent[chain.back()]);
      std::reverse(chain.begin(), chain.end());
      out.route.push_back(d0);
      for (std::size_t c = 1; c < chain.size(); ++c) {
        for (std::size_t q = pos_of(chain[c - 1]); q < pos_of(chain[c]); ++q) out.route.push_back(seq[q]);
        out.route.push_back(depot_of(chain[c]));
      }
    }
    return route_memo_.emplace(seq, std::move(out)).first->second;
  }

  void consider(const RouteSet& candidate, double value) {
    if (!found_ || better_solution(value, candidate, best_value_, best_)) {
      found_ = true;
      best_ = candidate;
      best_value_ = value;
    }
  }

  SaaSolution finish() {
    SaaSolution out;
    out.feasible = found_;
    out.routes = best_;
    out.value = best_value_;
    out.optimal = !stopped_;
    out.nodes = nodes_;
    return out;
  }

  bool tick() {
    ++nodes_;
    if (nodes_ >= cfg_.node_limit) stopped_ = true;
    if ((nodes_ & 255U) == 0) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
      if (el.count() > cfg_.time_limit_seconds) stopped_ = true;
    }
    return !stopped_;
  }

  void visit(std::size_t r) {
    visited_ |= (1ULL << r);
    sum_in_ -= bounds_.min_in[order_[r]];
    sum_out_ -= bounds_.min_out[order_[r]];
  }
  void unvisit(std::size_t r) {
    visited_ &= ~(1ULL << r);
    sum_in_ += bounds_.min_in[order_[r]];
    sum_out_ += bounds_.min_out[order_[r]];
  }

  [[nodiscard]] std::size_t unvisited_after(std::size_t rank) const {
    const std::uint64_t all = (1ULL << n_) - 1;
    const std::uint64_t later = all & ~((1ULL << (rank + 1)) - 1);
    return static_cast<std::size_t>(std::popcount(later & ~visited_));
  }

  void start_route(std::size_t r) {
    const VertexId j = order_[r];
    auto labels = start_labels(pb_, j, cap_);
    if (use_arrival_rule_) apply_arrival_rule(labels, j, pb_, cap_);
    if (labels.empty()) return;
    ++started_;
    open_.push_back(j);
    open_first_rank_.push_back(r);
    visit(r);
    if (unvisited_after(r) >= m_ - started_) dfs(labels);
    unvisit(r);
    open_first_rank_.pop_back();
    open_.pop_back();
    --started_;
  }

  void dfs(const std::vector<Label>& labels) {
    if (!tick()) return;
    const VertexId tail = open_.back();
    if (use_bound_ && found_) {
      const double lb = closed_value_ + min_cost(labels) +
                        bounds_.completion(sum_in_, sum_out_, tail, m_ - started_ + 1, m_ - started_);
      if (lb > best_value_ + kTieTolerance) return;
    }

    const std::size_t remaining = n_ - static_cast<std::size_t>(std::popcount(visited_));
    if (remaining == 0) {
      if (started_ == m_) leaf();
      return;
    }

    const std::size_t first_rank = open_first_rank_.back();
    for (std::size_t r = 0; r < n_ && !stopped_; ++r) {
      if (visited_ & (1ULL << r)) continue;
      const VertexId j = order_[r];
      auto next = extend_labels(labels, tail, j, pb_, cap_);
      if (use_arrival_rule_) apply_arrival_rule(next, j, pb_, cap_);
      if (next.empty()) continue;
      visit(r);
      if (unvisited_after(first_rank) >= m_ - started_) {
        open_.push_back(j);
        dfs(next);
        open_.pop_back();
      }
      unvisit(r);
    }

    if (started_ < m_ && !stopped_) {
      const RouteChoice ch = choose(open_);
      if (!ch.feasible) return;
      closed_.push_back(ch.route);
      closed_value_ += ch.value;
      std::vector<VertexId> saved_open;
      saved_open.swap(open_);
      for (std::size_t r = first_rank + 1; r < n_ && !stopped_; ++r) {
        if (visited_ & (1ULL << r)) continue;
        start_route(r);
      }
      open_.swap(saved_open);
      closed_value_ -= ch.value;
      closed_.pop_back();
    }
  }

  void leaf() {
    const RouteChoice& ch = choose(open_);
    if (!ch.feasible) return;
    RouteSet rs;
    rs.routes = closed_;
    rs.routes.push_back(ch.route);
    consider(canonical(rs), closed_value_ + ch.value);
  }

  const Instance& inst_;
  const ScenarioSet& gamma_;
  BnBConfig cfg_;
  DetProblem pb_;
  std::vector<BestDepotTable> tables_;
  EdgeBounds bounds_;
  std::vector<VertexId> order_;
  std::size_t n_;
  std::size_t m_;
  double cap_;
  bool use_arrival_rule_;
  bool use_bound_;

  std::map<RouteSeq, double> block_memo_;
  std::map<std::vector<VertexId>, RouteChoice> route_memo_;

  std::uint64_t visited_ = 0;
  double sum_in_ = 0.0;
  double sum_out_ = 0.0;
  std::vector<RouteSeq> closed_;
  double closed_value_ = 0.0;
  std::vector<VertexId> open_;
  std::vector<std::size_t> open_first_rank_;
  std::size_t started_ = 0;

  bool found_ = false;
  RouteSet best_;
  double best_value_ = kInf;
  std::size_t nodes_ = 0;
  bool stopped_ = false;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

SaaSolution solve_saa_problem(const Instance& instance, const ScenarioSet& gamma, const BnBConfig& config) {
  if (gamma.empty()) throw std::invalid_argument("SAA problem needs at least one scenario");
  SaaSearch search(instance, gamma, config);
  auto greedy = solve_deterministic_greedy(DetProblem(instance));
  if (greedy.feasible) search.offer(greedy.routes);
  if (config.initial_incumbent) search.offer(*config.initial_incumbent);
  auto sol = search.run();
  if (sol.feasible) {
    // Report the value with recourse summed over whole routes.
    sol.value = penalized_objective(sol.routes, gamma, instance, {0.0, ""}).value;
  }
  return sol;
}

ScenarioSet sample_gamma(const Instance& instance, const QuadrantMap& qmap, const SaaConfig& config, std::size_t k) {
  const std::uint64_t seed =
      config.replication_seeds.empty() ? derive_seed(config.seed, "gamma", k) : config.replication_seeds.at(k);
  return sample_scenarios(instance, qmap, seed, config.M, config.distribution, "gamma");
}

ScenarioSet sample_lambda(const Instance& instance, const QuadrantMap& qmap, const SaaConfig& config) {
  return sample_scenarios(instance, qmap, derive_seed(config.seed, "lambda"), config.lambda_size,
                          config.distribution, "lambda");
}

LowerBoundResult saa_lower_bound(const Instance& instance, const QuadrantMap& qmap, const SaaConfig& config) {
  config.validate();
  LowerBoundResult out;
  out.replications.resize(config.N);
  parallel_for(config.N, [&](std::size_t k) {
    out.replications[k] = solve_saa_problem(instance, sample_gamma(instance, qmap, config, k), config.bnb);
  });
  std::vector<double> values;
  bool rigorous = true;
  for (std::size_t k = 0; k < config.N; ++k) {
    const auto& rep = out.replications[k];
    if (!rep.feasible) throw std::runtime_error("SAA replication " + std::to_string(k) + " has no feasible solution");
    values.push_back(rep.value);
    rigorous = rigorous && rep.optimal;
  }
  out.estimate = make_estimate(std::move(values));
  out.estimate.rigorous = rigorous;
  return out;
}

double max_feasible_beta(const RouteSet& routes, const ScenarioSet& lambda, const Instance& instance) {
  const auto tables = precompute_best_depots(instance, lambda);
  const auto plans = evaluate_all(routes, lambda, tables, instance);
  double best = 0.0;
  for (const auto& p : plans) {
    if (p.feasible) best = std::max(best, p.beta);
  }
  return best;
}

namespace {

CandidateEvaluation evaluate_with_tables(const RouteSet& routes, const ScenarioSet& lambda,
                                         const std::vector<BestDepotTable>& tables, const Instance& instance,
                                         const PenaltyPolicy& policy) {
  const double cost = route_cost(routes, instance);
  const auto plans = evaluate_all(routes, lambda, tables, instance);
  CandidateEvaluation out;
  std::vector<double> per_scenario(plans.size());
  for (std::size_t s = 0; s < plans.size(); ++s) {
    if (plans[s].feasible) {
      per_scenario[s] = cost + plans[s].beta;
    } else {
      per_scenario[s] = cost + policy.nu;
      ++out.infeasible;
    }
  }
  // Mean weighted by scenario probability (equal weights give the plain mean).
  double weighted = 0.0;
  for (std::size_t s = 0; s < plans.size(); ++s) weighted += lambda.scenarios[s].probability * per_scenario[s];
  out.estimate = make_estimate(std::move(per_scenario));
  out.estimate.mean = weighted;
  out.estimate.lambda_tag = lambda.tag;
  return out;
}

}  // namespace

CandidateEvaluation evaluate_candidate(const RouteSet& routes, const ScenarioSet& lambda, const Instance& instance,
                                       const PenaltyPolicy& policy) {
  return evaluate_with_tables(routes, lambda, precompute_best_depots(instance, lambda), instance, policy);
}

UpperBoundResult saa_upper_bound(const std::vector<RouteSet>& candidates, const ScenarioSet& lambda,
                                 const Instance& instance, const std::optional<PenaltyPolicy>& policy) {
  if (candidates.empty()) throw std::invalid_argument("upper bound needs at least one candidate");
  for (const auto& c : candidates) {
    if (!nominal_feasibility(c, instance).feasible) {
      throw std::invalid_argument("upper bound candidates must be first-stage feasible");
    }
  }
  const auto tables = precompute_best_depots(instance, lambda);
  UpperBoundResult out;
  if (policy) {
    out.penalty = *policy;
  } else {
    double max_beta = 0.0;
    for (const auto& c : candidates) {
      for (const auto& p : evaluate_all(c, lambda, tables, instance)) {
        if (p.feasible) max_beta = std::max(max_beta, p.beta);
      }
    }
    out.penalty = make_penalty(instance, max_beta);
  }
  for (const auto& c : candidates) out.all.push_back(evaluate_with_tables(c, lambda, tables, instance, out.penalty));
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    if (better_solution(out.all[k].estimate.mean, canonical(candidates[k]), out.all[out.index].estimate.mean,
                        canonical(candidates[out.index]))) {
      out.index = k;
    }
  }
  out.routes = candidates[out.index];
  out.evaluation = out.all[out.index];
  return out;
}

EvpSolution solve_evp(const Instance& instance, const BnBConfig& config) {
  const auto sol = solve_deterministic(DetProblem(instance), config);
  if (!sol.feasible) throw std::runtime_error("instance has no fuel-feasible route set at the mean fuel");
  return {sol.routes, route_cost(sol.routes, instance),
          sol.optimal && instance.target_count() <= config.exact_target_limit};
}

CandidateEvaluation evaluate_eev(const RouteSet& evp_routes, const ScenarioSet& lambda, const Instance& instance,
                                 const PenaltyPolicy& policy) {
  return evaluate_candidate(evp_routes, lambda, instance, policy);
}

VssValue compute_vss(const SaaReport& report) {
  if (!report.eev) throw std::invalid_argument("VSS needs the EEV estimate");
  if (!report.ub && !report.h) throw std::invalid_argument("VSS needs an upper-bound or heuristic estimate");
  double best = kInf;
  for (const auto* e : {&report.ub, &report.h}) {
    if (!*e) continue;
    if ((*e)->lambda_tag != report.eev->lambda_tag) {
      throw std::invalid_argument("EEV and the compared estimate were evaluated on different samples");
    }
    best = std::min(best, (*e)->mean);
  }
  VssValue v;
  v.value = report.eev->mean - best;
  v.percent = v.value / report.eev->mean * 100.0;
  return v;
}

SaaReport run_pipeline(const Instance& instance, const QuadrantMap& qmap, const PipelineConfig& config,
                       PipelineTimings* timings) {
  config.saa.validate();
  PipelineTimings local;
  PipelineTimings& t = timings ? *timings : local;
  auto clock = std::chrono::steady_clock::now();
  auto lap = [&clock] {
    const auto now = std::chrono::steady_clock::now();
    const std::chrono::duration<double> d = now - clock;
    clock = now;
    return d.count();
  };
  SaaReport report;
  report.instance_name = config.instance_name;

  const auto evp = solve_evp(instance, config.saa.bnb);
  report.ev = evp.ev;
  report.evp_routes = evp.routes;
  t.evp = lap();

  const auto lambda = sample_lambda(instance, qmap, config.saa);
  report.lambda_tag = lambda.tag;
  const auto policy = make_penalty(instance, max_feasible_beta(evp.routes, lambda, instance));
  report.nu = policy.nu;

  const auto eev = evaluate_eev(evp.routes, lambda, instance, policy);
  report.eev = eev.estimate;
  report.eev->rigorous = evp.optimal;
  report.eev_infeasible = eev.infeasible;
  t.eev = lap();

  std::optional<UpperBoundResult> ub;
  std::optional<UpperBoundResult> h;
  if (config.run_saa) {
    auto lb = saa_lower_bound(instance, qmap, config.saa);
    report.lb = lb.estimate;
    std::vector<RouteSet> candidates;
    for (const auto& rep : lb.replications) candidates.push_back(rep.routes);
    ub = saa_upper_bound(candidates, lambda, instance, policy);
    report.ub = ub->evaluation.estimate;
    report.ub->rigorous = lb.estimate.rigorous;
    report.ub_infeasible = ub->evaluation.infeasible;
    t.saa = lap();
  }
  if (config.run_heuristic) {
    const TabuParams params = config.tabu ? *config.tabu : TabuParams::defaults(instance.target_count());
    std::vector<HeuristicResult> runs(config.saa.N);
    parallel_for(config.saa.N, [&](std::size_t k) {
      runs[k] = run_heuristic(instance, sample_gamma(instance, qmap, config.saa, k), config.saa.bnb, params);
    });
    std::vector<RouteSet> candidates;
    for (const auto& r : runs) {
      candidates.push_back(r.tabu.best);
      if (r.tabu.warning) ++report.heuristic_warnings;
    }
    h = saa_upper_bound(candidates, lambda, instance, policy);
    report.h = h->evaluation.estimate;
    report.h->rigorous = false;
    report.h_infeasible = h->evaluation.infeasible;
    t.heuristic = lap();
  }

  if (ub && h) {
    report.x_star = better_solution(h->evaluation.estimate.mean, canonical(h->routes), ub->evaluation.estimate.mean,
                                    canonical(ub->routes))
                        ? h->routes
                        : ub->routes;
  } else if (ub) {
    report.x_star = ub->routes;
  } else if (h) {
    report.x_star = h->routes;
  }
  if (report.ub || report.h) {
    const auto v = compute_vss(report);
    report.vss = v.value;
    report.vss_pct = v.percent;
  }
  return report;
}

}  // namespace fcmurp
