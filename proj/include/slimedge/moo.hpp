#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "slimedge/accuracy.hpp"
#include "slimedge/allocation.hpp"
#include "slimedge/fitness.hpp"
#include "slimedge/random.hpp"
#include "slimedge/sampler.hpp"

namespace slimedge {

/// All three are minimized: f1 bottleneck-latency ratio, f2 accuracy deviation
/// penalty, f3 negated normalized fitness.
struct ObjectiveTriple {
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;

  std::array<double, 3> as_array() const noexcept { return {f1, f2, f3}; }
  bool operator==(const ObjectiveTriple&) const = default;
};

/// g1 = A_min - A(X), g2 = max_v S_v / S_max,v - 1; feasible iff both <= 0.
struct ConstraintPair {
  double g1 = 0.0;
  double g2 = 0.0;

  bool feasible() const noexcept { return g1 <= 0.0 && g2 <= 0.0; }
  double violation() const noexcept { return std::max(0.0, g1) + std::max(0.0, g2); }
  bool operator==(const ConstraintPair&) const = default;
};

struct Candidate {
  PruningVector p;
  ObjectiveTriple objectives;
  ConstraintPair constraints;
  double accuracy = 0.0;
  double fitness = 0.0;  // R(p)

  bool feasible() const noexcept { return constraints.feasible(); }
};

/// f2 = kappa_g * dAcc above the floor, kappa_l * |dAcc| at or below it.
inline double accuracy_deviation(double delta_acc, double kappa_g, double kappa_l) {
  return delta_acc > 0.0 ? kappa_g * delta_acc : kappa_l * std::abs(delta_acc);
}

inline Candidate evaluate_candidate(const PruningVector& p, const Instance& inst) {
  Candidate c;
  c.p = p;
  c.accuracy = (*inst.models.accuracy)(p);
  const auto sizes = model_sizes(p, inst.base_sizes);
  const auto lat = latency(p.values(), inst.perf, inst.models.latency);
  const auto fit = fitness_from_parts(inst, c.accuracy, sizes, lat.bottleneck);
  c.fitness = fit.total;

  const double delta_acc = c.accuracy - inst.cluster.min_accuracy;
  c.objectives.f1 = lat.bottleneck / inst.t_baseline;
  c.objectives.f2 = accuracy_deviation(delta_acc, inst.hyper.kappa_g, inst.hyper.kappa_l);
  c.objectives.f3 = -fit.total / inst.r_max;

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < sizes.size(); ++v) worst = std::max(worst, sizes[v] / inst.caps[v]);
  c.constraints.g1 = inst.cluster.min_accuracy - c.accuracy;
  c.constraints.g2 = worst - 1.0;
  return c;
}

inline std::pair<ObjectiveTriple, ConstraintPair> evaluate_objectives(const PruningVector& p, const Instance& inst) {
  const auto c = evaluate_candidate(p, inst);
  return {c.objectives, c.constraints};
}

/// Constraint domination: feasible beats infeasible, two infeasible points
/// compare by total violation, two feasible points by Pareto dominance.
inline bool dominates(std::span<const double> a, double violation_a, std::span<const double> b, double violation_b) {
  const bool fa = violation_a <= 0.0;
  const bool fb = violation_b <= 0.0;
  if (fa != fb) return fa;
  if (!fa) return violation_a < violation_b;
  bool strictly = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m] > b[m]) return false;
    if (a[m] < b[m]) strictly = true;
  }
  return strictly;
}

inline bool dominates(const Candidate& a, const Candidate& b) {
  const auto fa = a.objectives.as_array();
  const auto fb = b.objectives.as_array();
  return dominates(fa, a.constraints.violation(), fb, b.constraints.violation());
}

/// Objective vector plus total constraint violation, the only view of a
/// candidate that sorting needs.
struct SortKey {
  std::vector<double> f;
  double violation = 0.0;
};

/// Deb's fast non-dominated sort. Returns the fronts in order; front 0 is the
/// non-dominated set.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<SortKey>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(pts[i].f, pts[i].violation, pts[j].f, pts[j].violation)) {
        dominated[i].push_back(j);
        ++count[j];
      } else if (dominates(pts[j].f, pts[j].violation, pts[i].f, pts[i].violation)) {
        dominated[j].push_back(i);
        ++count[i];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] == 0) fronts[0].push_back(i);
  }
  std::size_t k = 0;
  while (!fronts[k].empty()) {
    std::vector<std::size_t> next;
    for (auto i : fronts[k]) {
      for (auto j : dominated[i]) {
        if (--count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
    ++k;
  }
  fronts.pop_back();
  return fronts;
}

/// Crowding distance of each member of `front` (parallel to it). Boundary
/// members on any objective get +inf.
inline std::vector<double> crowding_distance(const std::vector<SortKey>& pts, const std::vector<std::size_t>& front) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  if (n <= 2) return std::vector<double>(n, std::numeric_limits<double>::infinity());
  const std::size_t m = pts[front[0]].f.size();
  std::vector<std::size_t> order(n);
  for (std::size_t obj = 0; obj < m; ++obj) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pts[front[a]].f[obj] < pts[front[b]].f[obj]; });
    const double lo = pts[front[order.front()]].f[obj];
    const double hi = pts[front[order.back()]].f[obj];
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    if (!(hi > lo)) continue;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double gap = pts[front[order[i + 1]]].f[obj] - pts[front[order[i - 1]]].f[obj];
      dist[order[i]] += gap / (hi - lo);
    }
  }
  return dist;
}

/// Rank-0 members of an NSGA-II run, sorted by f1 ascending (then f2, f3, p).
struct ParetoFront {
  std::vector<Candidate> members;
  bool feasible = false;  // true when the members are feasible

  std::size_t size() const noexcept { return members.size(); }
};

struct GenerationStats {
  std::size_t generation = 0;
  double best_f1 = std::numeric_limits<double>::quiet_NaN();  // best feasible f1
  std::size_t feasible_count = 0;
  std::size_t front_size = 0;
  double mean_f1 = 0.0;
  double min_f2 = 0.0;
  double min_f3 = 0.0;
  double min_violation = 0.0;
};

struct Nsga2Result {
  ParetoFront front;
  std::vector<GenerationStats> log;
  std::size_t evaluations = 0;
};

/// Search-space options shared by both evolutionary searches.
struct SearchOptions {
  /// Restricts every variable to the levels of this grid inside its box.
  std::optional<PruningGrid> grid;
  /// Keep an elitist archive of every non-dominated point evaluated and return
  /// it instead of the final population's rank-0 set.
  bool archive = false;
};

namespace detail {

inline constexpr double kSbxEps = 1e-14;
inline constexpr std::size_t kDuplicateRetriesPerIndividual = 20;

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Maps pruning vectors to the space the variation operators work in. Without
/// a grid that is the box [p_min, 0.99] itself. With a grid, each variable that
/// has a level inside its box becomes a level index relaxed to
/// [lo - 0.5, hi + 0.5], so rounding gives every level an equal-width bin.
class Coding {
 public:
  Coding(const Instance& inst, const std::optional<PruningGrid>& grid) : grid_(grid) {
    const auto p_min = min_pruning(inst.cluster);
    const std::size_t n = p_min.size();
    box_.lower.resize(n);
    box_.upper.resize(n);
    lo_.assign(n, 0);
    hi_.assign(n, 0);
    discrete_.assign(n, false);
    for (std::size_t v = 0; v < n; ++v) {
      box_.lower[v] = p_min[v];
      box_.upper[v] = kMaxPruning;
      if (!grid_) continue;
      const auto& levels = grid_->levels();
      const auto first = std::lower_bound(levels.begin(), levels.end(), p_min[v]);
      const auto last = std::upper_bound(levels.begin(), levels.end(), kMaxPruning);
      if (first >= last) continue;
      lo_[v] = static_cast<std::size_t>(first - levels.begin());
      hi_[v] = static_cast<std::size_t>(last - levels.begin()) - 1;
      discrete_[v] = true;
      box_.lower[v] = static_cast<double>(lo_[v]) - 0.5;
      box_.upper[v] = static_cast<double>(hi_[v]) + 0.5;
    }
  }

  const Box& box() const noexcept { return box_; }
  bool discrete(std::size_t v) const { return discrete_[v]; }

  /// Coded units per unit of pruning, used to scale absolute mutation widths.
  double scale(std::size_t v) const {
    if (!discrete_[v] || grid_->size() < 2) return 1.0;
    const auto& levels = grid_->levels();
    return static_cast<double>(levels.size() - 1) / (levels.back() - levels.front());
  }

  std::vector<double> encode(const PruningVector& p) const {
    std::vector<double> x(p.size());
    for (std::size_t v = 0; v < x.size(); ++v) {
      if (discrete_[v]) {
        x[v] = static_cast<double>(std::clamp(grid_->nearest_index(p[v]), lo_[v], hi_[v]));
      } else {
        x[v] = std::clamp(p[v], box_.lower[v], box_.upper[v]);
      }
    }
    return x;
  }

  PruningVector decode(std::vector<double> x) const {
    for (std::size_t v = 0; v < x.size(); ++v) {
      if (discrete_[v]) {
        const double r = std::clamp(std::round(x[v]), static_cast<double>(lo_[v]), static_cast<double>(hi_[v]));
        x[v] = (*grid_)[static_cast<std::size_t>(r)];
      } else {
        x[v] = std::clamp(x[v], box_.lower[v], box_.upper[v]);
      }
    }
    return PruningVector(std::move(x));
  }

 private:
  std::optional<PruningGrid> grid_;
  Box box_;
  std::vector<std::size_t> lo_;
  std::vector<std::size_t> hi_;
  std::vector<bool> discrete_;
};

inline double sbx_beta_q(double rand, double beta, double eta) {
  const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
  if (rand <= 1.0 / alpha) return std::pow(rand * alpha, 1.0 / (eta + 1.0));
  return std::pow(1.0 / (2.0 - rand * alpha), 1.0 / (eta + 1.0));
}

/// Bounded simulated-binary crossover.
inline std::pair<std::vector<double>, std::vector<double>> sbx(const std::vector<double>& a, const std::vector<double>& b,
                                                               const Box& box, double eta, double rate, Rng& rng) {
  auto c1 = a;
  auto c2 = b;
  if (uniform01(rng) > rate) return {c1, c2};
  for (std::size_t v = 0; v < a.size(); ++v) {
    if (uniform01(rng) > 0.5) continue;
    if (std::abs(a[v] - b[v]) <= kSbxEps) continue;
    const double y1 = std::min(a[v], b[v]);
    const double y2 = std::max(a[v], b[v]);
    const double yl = box.lower[v];
    const double yu = box.upper[v];
    const double r = uniform01(rng);
    double bq = sbx_beta_q(r, 1.0 + 2.0 * (y1 - yl) / (y2 - y1), eta);
    double child1 = 0.5 * ((y1 + y2) - bq * (y2 - y1));
    bq = sbx_beta_q(r, 1.0 + 2.0 * (yu - y2) / (y2 - y1), eta);
    double child2 = 0.5 * ((y1 + y2) + bq * (y2 - y1));
    child1 = std::clamp(child1, yl, yu);
    child2 = std::clamp(child2, yl, yu);
    if (uniform01(rng) <= 0.5) {
      c1[v] = child2;
      c2[v] = child1;
    } else {
      c1[v] = child1;
      c2[v] = child2;
    }
  }
  return {c1, c2};
}

/// Bounded polynomial mutation.
inline void polynomial_mutation(std::vector<double>& x, const Box& box, double eta, double rate, Rng& rng) {
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (uniform01(rng) > rate) continue;
    const double yl = box.lower[v];
    const double yu = box.upper[v];
    if (!(yu > yl)) continue;
    const double y = x[v];
    const double d1 = (y - yl) / (yu - yl);
    const double d2 = (yu - y) / (yu - yl);
    const double r = uniform01(rng);
    const double power = 1.0 / (eta + 1.0);
    double dq = 0.0;
    if (r <= 0.5) {
      const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
      dq = std::pow(val, power) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
      dq = 1.0 - std::pow(val, power);
    }
    x[v] = std::clamp(y + dq * (yu - yl), yl, yu);
  }
}

inline SortKey key_of(const Candidate& c) {
  return {{c.objectives.f1, c.objectives.f2, c.objectives.f3}, c.constraints.violation()};
}

inline bool front_order(const Candidate& a, const Candidate& b) {
  if (a.objectives.f1 != b.objectives.f1) return a.objectives.f1 < b.objectives.f1;
  if (a.objectives.f2 != b.objectives.f2) return a.objectives.f2 < b.objectives.f2;
  if (a.objectives.f3 != b.objectives.f3) return a.objectives.f3 < b.objectives.f3;
  return a.p < b.p;
}

/// Sorted, de-duplicated (by decision vector) front.
inline ParetoFront make_front(std::vector<Candidate> members) {
  std::sort(members.begin(), members.end(), front_order);
  std::vector<Candidate> unique;
  for (auto& c : members) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const Candidate& u) { return u.p == c.p; });
    if (!dup) unique.push_back(std::move(c));
  }
  ParetoFront front;
  front.feasible = !unique.empty() && unique.front().feasible();
  front.members = std::move(unique);
  return front;
}

/// Non-dominated archive under constraint domination.
class Archive {
 public:
  void insert(const Candidate& c) {
    for (const auto& m : members_) {
      if (m.p == c.p || dominates(m, c)) return;
    }
    std::erase_if(members_, [&](const Candidate& m) { return dominates(c, m); });
    members_.push_back(c);
  }
  const std::vector<Candidate>& members() const noexcept { return members_; }

 private:
  std::vector<Candidate> members_;
};

inline GenerationStats stats_of(std::size_t gen, const std::vector<Candidate>& pop, std::size_t front_size) {
  GenerationStats s;
  s.generation = gen;
  s.front_size = front_size;
  s.min_f2 = std::numeric_limits<double>::infinity();
  s.min_f3 = std::numeric_limits<double>::infinity();
  s.min_violation = std::numeric_limits<double>::infinity();
  double sum_f1 = 0.0;
  for (const auto& c : pop) {
    sum_f1 += c.objectives.f1;
    s.min_f2 = std::min(s.min_f2, c.objectives.f2);
    s.min_f3 = std::min(s.min_f3, c.objectives.f3);
    s.min_violation = std::min(s.min_violation, c.constraints.violation());
    if (c.feasible()) {
      ++s.feasible_count;
      if (std::isnan(s.best_f1) || c.objectives.f1 < s.best_f1) s.best_f1 = c.objectives.f1;
    }
  }
  s.mean_f1 = pop.empty() ? 0.0 : sum_f1 / static_cast<double>(pop.size());
  return s;
}

}  // namespace detail

/// NSGA-II over (f1, f2, f3) subject to g1, g2, inside the box [p_min, 0.99]^V.
/// Population size is the size of `init` and must be even and >= 4.
inline Nsga2Result nsga2_run(const Instance& inst, const InitialPopulation& init, std::uint64_t seed,
                             const SearchOptions& opts = {}) {
  const std::size_t n = init.size();
  if (n < 4) throw error(errc::population_too_small, "NSGA-II needs at least 4 individuals");
  if (n % 2 != 0) throw error(errc::invalid_argument, "NSGA-II population size must be even");
  const auto& h = inst.hyper;
  const detail::Coding coding(inst, opts.grid);
  const auto& box = coding.box();
  const double mutation_rate = h.mutation_rate > 0.0 ? h.mutation_rate : 1.0 / static_cast<double>(inst.views());
  Rng rng(seed);

  Nsga2Result result;
  detail::Archive archive;
  auto evaluate = [&](const PruningVector& p) {
    auto c = evaluate_candidate(p, inst);
    ++result.evaluations;
    if (opts.archive) archive.insert(c);
    return c;
  };

  std::vector<Candidate> pop;
  pop.reserve(2 * n);
  for (const auto& row : init.rows) pop.push_back(evaluate(coding.decode(coding.encode(row))));

  std::vector<std::size_t> rank(n, 0);
  std::vector<double> crowd(n, 0.0);
  auto assign_rank_crowding = [&](const std::vector<Candidate>& members) {
    std::vector<SortKey> keys;
    keys.reserve(members.size());
    for (const auto& c : members) keys.push_back(detail::key_of(c));
    const auto fronts = non_dominated_sort(keys);
    rank.assign(members.size(), 0);
    crowd.assign(members.size(), 0.0);
    for (std::size_t k = 0; k < fronts.size(); ++k) {
      const auto d = crowding_distance(keys, fronts[k]);
      for (std::size_t i = 0; i < fronts[k].size(); ++i) {
        rank[fronts[k][i]] = k;
        crowd[fronts[k][i]] = d[i];
      }
    }
    return fronts.empty() ? std::size_t{0} : fronts[0].size();
  };
  result.log.push_back(detail::stats_of(0, pop, assign_rank_crowding(pop)));

  auto tournament = [&]() -> const Candidate& {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    const auto a = pick(rng);
    const auto b = pick(rng);
    if (rank[a] != rank[b]) return pop[rank[a] < rank[b] ? a : b];
    if (crowd[a] != crowd[b]) return pop[crowd[a] > crowd[b] ? a : b];
    return pop[uniform01(rng) <= 0.5 ? a : b];
  };
  auto known = [](const std::vector<Candidate>& set, const PruningVector& p) {
    return std::any_of(set.begin(), set.end(), [&](const Candidate& c) { return c.p == p; });
  };

  // Offspring that copy an existing vector are redrawn, up to a per-generation
  // budget. This only matters on small discrete grids, where snapping sends
  // most small perturbations back to the parent.
  const std::size_t retry_budget = detail::kDuplicateRetriesPerIndividual * n;
  for (std::size_t gen = 1; gen <= h.n_generations; ++gen) {
    std::vector<Candidate> offspring;
    offspring.reserve(n);
    std::size_t retries = 0;
    while (offspring.size() < n) {
      const auto& pa = tournament();
      const auto& pb = tournament();
      auto [c1, c2] = detail::sbx(coding.encode(pa.p), coding.encode(pb.p), box, h.eta_c, h.crossover_rate, rng);
      detail::polynomial_mutation(c1, box, h.eta_m, mutation_rate, rng);
      detail::polynomial_mutation(c2, box, h.eta_m, mutation_rate, rng);
      for (auto* child : {&c1, &c2}) {
        if (offspring.size() == n) break;
        auto p = coding.decode(std::move(*child));
        if ((known(pop, p) || known(offspring, p)) && retries < retry_budget) {
          ++retries;
          continue;
        }
        offspring.push_back(evaluate(p));
      }
    }

    std::vector<Candidate> merged;
    merged.reserve(pop.size() + offspring.size());
    for (auto* part : {&pop, &offspring}) {
      for (auto& c : *part) {
        if (!known(merged, c.p)) merged.push_back(std::move(c));
      }
    }
    const std::size_t target = std::min(n, merged.size());

    std::vector<SortKey> keys;
    keys.reserve(merged.size());
    for (const auto& c : merged) keys.push_back(detail::key_of(c));
    const auto fronts = non_dominated_sort(keys);

    std::vector<Candidate> next;
    next.reserve(2 * n);
    for (const auto& front : fronts) {
      if (next.size() + front.size() <= target) {
        for (auto i : front) next.push_back(merged[i]);
        continue;
      }
      // Truncate the overflowing front by crowding distance; ties keep the lower f1.
      const auto d = crowding_distance(keys, front);
      std::vector<std::size_t> order(front.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (d[a] != d[b]) return d[a] > d[b];
        return merged[front[a]].objectives.f1 < merged[front[b]].objectives.f1;
      });
      for (std::size_t i = 0; next.size() < target; ++i) next.push_back(merged[front[order[i]]]);
      break;
    }
    pop = std::move(next);
    result.log.push_back(detail::stats_of(gen, pop, assign_rank_crowding(pop)));
  }

  if (opts.archive) {
    result.front = detail::make_front(archive.members());
  } else {
    std::vector<Candidate> rank0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (rank[i] == 0) rank0.push_back(pop[i]);
    }
    result.front = detail::make_front(std::move(rank0));
  }
  return result;
}

/// Least-latency feasible member; ties go to the higher fitness (more
/// negative f3), then the lexicographically smaller vector.
inline std::optional<Candidate> select_deployment(const ParetoFront& front) {
  const Candidate* best = nullptr;
  for (const auto& c : front.members) {
    if (!c.feasible()) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const auto& b = best->objectives;
    const auto& o = c.objectives;
    if (o.f1 < b.f1 || (o.f1 == b.f1 && (o.f3 < b.f3 || (o.f3 == b.f3 && c.p < best->p)))) best = &c;
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace slimedge
