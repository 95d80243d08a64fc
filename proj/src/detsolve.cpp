#include "fcmurp/detsolve.hpp"

#include "search_support.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fcmurp {

namespace detail {

void pareto_filter(std::vector<Label>& labels) {
  std::stable_sort(labels.begin(), labels.end(), [](const Label& a, const Label& b) {
    if (a.fuel != b.fuel) return a.fuel < b.fuel;
    return a.cost < b.cost;
  });
  std::size_t kept = 0;
  double best_cost = kInf;
  for (const auto& l : labels) {
    if (l.cost < best_cost) {
      labels[kept++] = l;
      best_cost = l.cost;
    }
  }
  labels.resize(kept);
}

std::vector<Label> start_labels(const DetProblem& pb, VertexId first, double cap) {
  const VertexId d0 = pb.instance().home_depot();
  const double f = pb.fuel()(d0, first);
  if (f > cap) return {};
  return {Label{f, pb.cost()(d0, first), -1, -1}};
}

std::vector<Label> extend_labels(const std::vector<Label>& labels, VertexId from, VertexId to, const DetProblem& pb,
                                 double cap) {
  const Matrix& fuel = pb.fuel();
  const Matrix& cost = pb.cost();
  std::vector<Label> out;
  out.reserve(labels.size() + pb.instance().depots().size());
  const double f_direct = fuel(from, to);
  const double c_direct = cost(from, to);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].fuel + f_direct <= cap) {
      out.push_back({labels[k].fuel + f_direct, labels[k].cost + c_direct, static_cast<int>(k), -1});
    }
  }
  for (VertexId d : pb.instance().depots()) {
    if (d == from || d == to) continue;
    const double f_out = fuel(d, to);
    if (f_out > cap) continue;
    const double f_in = fuel(from, d);
    int best = -1;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k].fuel + f_in > cap) continue;
      if (best < 0 || labels[k].cost < labels[static_cast<std::size_t>(best)].cost) best = static_cast<int>(k);
    }
    if (best < 0) continue;
    out.push_back({f_out, labels[static_cast<std::size_t>(best)].cost + cost(from, d) + cost(d, to), best,
                   static_cast<int>(d)});
  }
  pareto_filter(out);
  return out;
}

int close_label(const std::vector<Label>& labels, VertexId tail, const DetProblem& pb, double cap, double& total) {
  const VertexId d0 = pb.instance().home_depot();
  const double f = pb.fuel()(tail, d0);
  const double c = pb.cost()(tail, d0);
  int best = -1;
  total = kInf;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k].fuel + f > cap) continue;
    const double t = labels[k].cost + c;
    if (t < total) {
      total = t;
      best = static_cast<int>(k);
    }
  }
  return best;
}

void apply_arrival_rule(std::vector<Label>& labels, VertexId at, const DetProblem& pb, double cap) {
  const double reserve = pb.min_fuel_to_depot(at);
  std::erase_if(labels, [&](const Label& l) { return l.fuel + reserve > cap; });
}

double min_cost(const std::vector<Label>& labels) {
  double best = kInf;
  for (const auto& l : labels) best = std::min(best, l.cost);
  return best;
}

EdgeBounds::EdgeBounds(const DetProblem& pb) {
  const Instance& inst = pb.instance();
  const Matrix& c = pb.cost();
  const VertexId d0 = inst.home_depot();
  min_in.assign(inst.vertex_count(), kInf);
  min_out.assign(inst.vertex_count(), kInf);
  auto reduced = [&](VertexId i, VertexId j) {
    double best = c(i, j);
    for (VertexId d : inst.depots()) best = std::min(best, c(i, d) + c(d, j));
    return best;
  };
  for (VertexId j : inst.targets()) {
    min_in[j] = std::min(min_in[j], c(d0, j));
    min_out[j] = std::min(min_out[j], c(j, d0));
    min_in_home = std::min(min_in_home, c(j, d0));
    min_out_home = std::min(min_out_home, c(d0, j));
    for (VertexId i : inst.targets()) {
      if (i == j) continue;
      const double r = reduced(i, j);
      min_in[j] = std::min(min_in[j], r);
      min_out[i] = std::min(min_out[i], r);
    }
  }
}

double EdgeBounds::completion(double sum_in_unvisited, double sum_out_unvisited, std::optional<VertexId> tail,
                              std::size_t routes_open, std::size_t routes_unstarted) const {
  const double in_bound = sum_in_unvisited + static_cast<double>(routes_open) * min_in_home;
  double out_bound = sum_out_unvisited + static_cast<double>(routes_unstarted) * min_out_home;
  if (tail) out_bound += min_out[*tail];
  return std::max(in_bound, out_bound);
}

std::vector<VertexId> ranked_targets(const Instance& inst) {
  std::vector<VertexId> order = inst.targets();
  const Point home = inst.coordinates()[inst.home_depot()];
  std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) {
    const double da = euclidean(home, inst.coordinates()[a]);
    const double db = euclidean(home, inst.coordinates()[b]);
    if (da != db) return da > db;
    return a < b;
  });
  return order;
}

double solution_cost(const RouteSet& routes, const Matrix& cost) {
  double total = 0.0;
  for (const auto& r : routes.routes) total += sequence_cost(r, cost);
  return total;
}

}  // namespace detail

using namespace detail;

namespace {

class ExactSearch {
 public:
  ExactSearch(const DetProblem& pb, const BnBConfig& cfg)
      : pb_(pb),
        cfg_(cfg),
        bounds_(pb),
        order_(ranked_targets(pb.instance())),
        n_(order_.size()),
        m_(pb.instance().vehicles()),
        cap_(pb.instance().fuel_capacity() + kTolerance),
        use_arrival_rule_(cfg.strengthened_pruning && pb.fuel_metric()) {
    if (n_ > 63) throw std::invalid_argument("exact solver supports at most 63 targets");
    for (std::size_t r = 0; r < n_; ++r) {
      sum_in_ += bounds_.min_in[order_[r]];
      sum_out_ += bounds_.min_out[order_[r]];
    }
  }

  void offer(const RouteSet& routes) {
    auto re = reinsert_depots(routes, pb_);
    if (!re) return;
    consider(canonical(re->first));
  }

  DetSolution run() {
    start_ = std::chrono::steady_clock::now();
    if (m_ > n_ || m_ == 0) return finish();
    for (std::size_t r = 0; r < n_ && !stopped_; ++r) {
      // Remaining routes must each start with a later-ranked target.
      if (n_ - r - 1 < m_ - 1) break;
      start_route(r);
    }
    return finish();
  }

 private:
  void consider(const RouteSet& candidate) {
    const double c = solution_cost(candidate, pb_.cost());
    if (!found_ || better_solution(c, candidate, best_cost_, best_)) {
      found_ = true;
      best_ = candidate;
      best_cost_ = c;
    }
  }

  DetSolution finish() {
    DetSolution out;
    out.feasible = found_;
    out.routes = best_;
    out.cost = best_cost_;
    out.optimal = !stopped_;
    out.nodes = nodes_;
    return out;
  }

  bool tick() {
    ++nodes_;
    if (nodes_ >= cfg_.node_limit) stopped_ = true;
    if ((nodes_ & 1023U) == 0) {
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

  /// Unvisited targets ranked after `rank`.
  [[nodiscard]] std::size_t unvisited_after(std::size_t rank) const {
    const std::uint64_t all = (n_ == 64) ? ~0ULL : ((1ULL << n_) - 1);
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
    const double fixed = closed_cost_ + min_cost(labels);
    const double lb = fixed + bounds_.completion(sum_in_, sum_out_, tail, m_ - started_ + 1, m_ - started_);
    if (found_ && lb > best_cost_ + kTieTolerance) return;

    const std::size_t remaining = n_ - static_cast<std::size_t>(std::popcount(visited_));
    if (remaining == 0) {
      if (started_ == m_) leaf(labels);
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
      double rc = 0.0;
      if (close_label(labels, tail, pb_, cap_, rc) < 0) return;
      closed_.push_back(open_);
      closed_cost_ += rc;
      std::vector<VertexId> saved_open;
      saved_open.swap(open_);
      for (std::size_t r = first_rank + 1; r < n_ && !stopped_; ++r) {
        if (visited_ & (1ULL << r)) continue;
        start_route(r);
      }
      open_.swap(saved_open);
      closed_cost_ -= rc;
      closed_.pop_back();
    }
  }

  void leaf(const std::vector<Label>& labels) {
    double rc = 0.0;
    if (close_label(labels, open_.back(), pb_, cap_, rc) < 0) return;
    if (found_ && closed_cost_ + rc > best_cost_ + kTieTolerance) return;
    RouteSet rs;
    for (const auto& seq : closed_) rs.routes.push_back(seq);
    rs.routes.push_back(open_);
    auto re = reinsert_depots(rs, pb_);
    if (!re) return;
    consider(canonical(re->first));
  }

  const DetProblem& pb_;
  BnBConfig cfg_;
  EdgeBounds bounds_;
  std::vector<VertexId> order_;
  std::size_t n_;
  std::size_t m_;
  double cap_;
  bool use_arrival_rule_;

  std::uint64_t visited_ = 0;
  double sum_in_ = 0.0;
  double sum_out_ = 0.0;
  std::vector<std::vector<VertexId>> closed_;
  double closed_cost_ = 0.0;
  std::vector<VertexId> open_;
  std::vector<std::size_t> open_first_rank_;
  std::size_t started_ = 0;

  bool found_ = false;
  RouteSet best_;
  double best_cost_ = kInf;
  std::size_t nodes_ = 0;
  bool stopped_ = false;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

DetProblem::DetProblem(const Instance& instance, std::optional<Matrix> cost_override,
                       std::optional<Matrix> fuel_override)
    : instance_(&instance), cost_(std::move(cost_override)), fuel_(std::move(fuel_override)) {
  if ((cost_ && cost_->size() != instance.vertex_count()) || (fuel_ && fuel_->size() != instance.vertex_count())) {
    throw StructuralError("override matrix does not cover every ordered pair");
  }
  const Matrix& f = fuel();
  to_depot_.assign(instance.vertex_count(), kInf);
  for (VertexId v = 0; v < instance.vertex_count(); ++v) {
    for (VertexId d : instance.depots()) to_depot_[v] = d == v ? 0.0 : std::min(to_depot_[v], f(v, d));
  }
  fuel_metric_ = satisfies_triangle_inequality(f);
}

InsertionResult optimal_depot_insertion(std::span<const VertexId> sequence, const DetProblem& problem) {
  InsertionResult out;
  if (sequence.empty()) return out;
  const double cap = problem.instance().fuel_capacity() + kTolerance;
  std::vector<std::vector<Label>> stages;
  stages.push_back(start_labels(problem, sequence[0], cap));
  if (stages.back().empty()) return out;
  for (std::size_t k = 1; k < sequence.size(); ++k) {
    stages.push_back(extend_labels(stages.back(), sequence[k - 1], sequence[k], problem, cap));
    if (stages.back().empty()) return out;
  }
  double total = 0.0;
  int idx = close_label(stages.back(), sequence.back(), problem, cap, total);
  if (idx < 0) return out;

  // Walk back through the parents, collecting the target and the depot
  // placed before it, then reverse.
  RouteSeq rev{problem.instance().home_depot()};
  for (std::size_t k = sequence.size(); k-- > 0;) {
    const Label& l = stages[k][static_cast<std::size_t>(idx)];
    rev.push_back(sequence[k]);
    if (l.via >= 0) rev.push_back(static_cast<VertexId>(l.via));
    idx = l.parent;
  }
  rev.push_back(problem.instance().home_depot());
  out.route.assign(rev.rbegin(), rev.rend());
  out.cost = sequence_cost(out.route, problem.cost());
  out.feasible = true;
  return out;
}

std::optional<std::pair<RouteSet, double>> reinsert_depots(const RouteSet& routes, const DetProblem& problem) {
  RouteSet out;
  double total = 0.0;
  for (const auto& r : routes.routes) {
    const auto seq = targets_of(r, problem.instance());
    auto ins = optimal_depot_insertion(seq, problem);
    if (!ins.feasible) return std::nullopt;
    total += ins.cost;
    out.routes.push_back(std::move(ins.route));
  }
  return std::make_pair(std::move(out), total);
}

DetSolution solve_deterministic_exact(const DetProblem& problem, const BnBConfig& config) {
  ExactSearch search(problem, config);
  auto greedy = solve_deterministic_greedy(problem);
  if (greedy.feasible) search.offer(greedy.routes);
  if (config.initial_incumbent) search.offer(*config.initial_incumbent);
  return search.run();
}

double node_lower_bound(const DetProblem& problem, const PartialSolution& node) {
  const Instance& inst = problem.instance();
  const double cap = inst.fuel_capacity() + kTolerance;
  EdgeBounds bounds(problem);
  std::vector<char> seen(inst.vertex_count(), 0);
  double fixed = 0.0;
  for (const auto& seq : node.closed) {
    auto ins = optimal_depot_insertion(seq, problem);
    if (!ins.feasible) return kInf;
    fixed += ins.cost;
    for (VertexId v : seq) seen[v] = 1;
  }
  std::optional<VertexId> tail;
  if (!node.open.empty()) {
    auto labels = start_labels(problem, node.open[0], cap);
    for (std::size_t k = 1; k < node.open.size() && !labels.empty(); ++k) {
      labels = extend_labels(labels, node.open[k - 1], node.open[k], problem, cap);
    }
    if (labels.empty()) return kInf;
    fixed += min_cost(labels);
    for (VertexId v : node.open) seen[v] = 1;
    tail = node.open.back();
  }
  double sum_in = 0.0;
  double sum_out = 0.0;
  for (VertexId t : inst.targets()) {
    if (seen[t]) continue;
    sum_in += bounds.min_in[t];
    sum_out += bounds.min_out[t];
  }
  const std::size_t started = node.closed.size() + (node.open.empty() ? 0 : 1);
  const std::size_t m = inst.vehicles();
  if (started > m) return kInf;
  const std::size_t to_close = m - node.closed.size();
  return fixed + bounds.completion(sum_in, sum_out, tail, to_close, m - started);
}

namespace {

double insertion_cost_or_inf(const std::vector<VertexId>& seq, const DetProblem& pb) {
  auto ins = optimal_depot_insertion(seq, pb);
  return ins.feasible ? ins.cost : kInf;
}

void two_opt(std::vector<VertexId>& seq, const DetProblem& pb) {
  double current = insertion_cost_or_inf(seq, pb);
  bool improved = true;
  for (int pass = 0; improved && pass < 200; ++pass) {
    improved = false;
    for (std::size_t i = 0; i + 1 < seq.size() && !improved; ++i) {
      for (std::size_t j = i + 1; j < seq.size() && !improved; ++j) {
        std::reverse(seq.begin() + static_cast<std::ptrdiff_t>(i), seq.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        const double c = insertion_cost_or_inf(seq, pb);
        if (c < current - 1e-12) {
          current = c;
          improved = true;
        } else {
          std::reverse(seq.begin() + static_cast<std::ptrdiff_t>(i),
                       seq.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        }
      }
    }
  }
}

std::vector<VertexId> nearest_neighbour(std::vector<VertexId> group, const DetProblem& pb) {
  std::vector<VertexId> out;
  VertexId at = pb.instance().home_depot();
  while (!group.empty()) {
    auto it = std::min_element(group.begin(), group.end(), [&](VertexId a, VertexId b) {
      const double ca = pb.cost()(at, a);
      const double cb = pb.cost()(at, b);
      if (ca != cb) return ca < cb;
      return a < b;
    });
    at = *it;
    out.push_back(at);
    group.erase(it);
  }
  return out;
}

}  // namespace

DetSolution solve_deterministic_greedy(const DetProblem& problem) {
  const Instance& inst = problem.instance();
  DetSolution best;
  const std::size_t n = inst.target_count();
  const std::size_t m = inst.vehicles();
  if (m == 0 || m > n) return best;

  std::vector<VertexId> sweep = inst.targets();
  const Point home = inst.coordinates()[inst.home_depot()];
  std::stable_sort(sweep.begin(), sweep.end(), [&](VertexId a, VertexId b) {
    const Point& pa = inst.coordinates()[a];
    const Point& pb = inst.coordinates()[b];
    const double aa = std::atan2(pa.y - home.y, pa.x - home.x);
    const double ab = std::atan2(pb.y - home.y, pb.x - home.x);
    if (aa != ab) return aa < ab;
    return a < b;
  });

  for (std::size_t offset = 0; offset < n; ++offset) {
    RouteSet rs;
    bool ok = true;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < m && ok; ++k) {
      const std::size_t size = n / m + (k < n % m ? 1 : 0);
      std::vector<VertexId> group;
      for (std::size_t q = 0; q < size; ++q) group.push_back(sweep[(offset + pos + q) % n]);
      pos += size;
      auto seq = nearest_neighbour(group, problem);
      two_opt(seq, problem);
      auto ins = optimal_depot_insertion(seq, problem);
      if (!ins.feasible) {
        ok = false;
        break;
      }
      rs.routes.push_back(std::move(ins.route));
    }
    if (!ok) continue;
    rs = canonical(rs);
    const double c = solution_cost(rs, problem.cost());
    if (!best.feasible || better_solution(c, rs, best.cost, best.routes)) {
      best.feasible = true;
      best.routes = rs;
      best.cost = c;
    }
  }
  return best;
}

DetSolution solve_deterministic(const DetProblem& problem, const BnBConfig& config) {
  if (problem.instance().target_count() > config.exact_target_limit) return solve_deterministic_greedy(problem);
  return solve_deterministic_exact(problem, config);
}

}  // namespace fcmurp
