#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "slimedge/allocation.hpp"
#include "slimedge/fitness.hpp"
#include "slimedge/moo.hpp"
#include "slimedge/random.hpp"
#include "slimedge/sampler.hpp"
#include "slimedge/soga.hpp"

namespace slimedge {

enum class SolutionPath { nsga2, ga_fallback, min_pruning_fallback, uniform_baseline };

constexpr std::string_view to_string(SolutionPath p) noexcept {
  switch (p) {
    case SolutionPath::nsga2: return "nsga2";
    case SolutionPath::ga_fallback: return "ga_fallback";
    case SolutionPath::min_pruning_fallback: return "min_pruning_fallback";
    case SolutionPath::uniform_baseline: return "uniform_baseline";
  }
  return "unknown";
}

struct OptimizationReport {
  PruningVector chosen;
  SolutionPath path = SolutionPath::nsga2;
  ParetoFront front;
  std::vector<double> sizes_mb;
  std::vector<double> latencies;
  double accuracy = 0.0;
  double speedup = 0.0;  // T_baseline / max_v T_v(chosen)
  std::size_t violations = 0;  // views with size > cap
  ConstraintPair constraints;
  PenaltyValue penalty;
  FitnessBreakdown fitness;
  std::vector<GenerationStats> nsga2_log;
  std::vector<double> ga_log;  // empty unless the GA ran
  std::optional<double> wall_time_s;

  bool feasible() const noexcept { return constraints.feasible(); }
};

struct PipelineOptions {
  SearchOptions search;
  bool record_wall_time = false;
};

/// Recomputes every reported quantity from the vector itself.
inline OptimizationReport describe(const PruningVector& p, const Instance& inst, SolutionPath path) {
  OptimizationReport r;
  r.chosen = p;
  r.path = path;
  const auto c = evaluate_candidate(p, inst);
  r.accuracy = c.accuracy;
  r.constraints = c.constraints;
  r.sizes_mb = model_sizes(p, inst.base_sizes);
  const auto lat = latency(p.values(), inst.perf, inst.models.latency);
  r.latencies = lat.per_view;
  r.speedup = inst.t_baseline / lat.bottleneck;
  for (std::size_t v = 0; v < r.sizes_mb.size(); ++v) {
    if (r.sizes_mb[v] > inst.caps[v]) ++r.violations;
  }
  r.penalty = penalty(p, inst);
  r.fitness = fitness_from_parts(inst, c.accuracy, r.sizes_mb, lat.bottleneck);
  return r;
}

/// Stage seeds are split from hyper.seed so each stage's stream is independent.
enum class Stage : std::uint64_t { sampler = 1, nsga2 = 2, ga_sampler = 3, ga = 4 };

inline std::uint64_t stage_seed(std::uint64_t seed, Stage s) { return split_seed(seed, static_cast<std::uint64_t>(s)); }

/// allocate -> sample -> NSGA-II -> GA on penalty -> minimum pruning.
inline OptimizationReport optimize(const Instance& inst, const PipelineOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto& h = inst.hyper;
  validate_hyperparams(h);
  const auto alloc = allocate(inst.cluster, h);
  const auto init = sample_population(inst.cluster, alloc, h.pop_size, h.omega, stage_seed(h.seed, Stage::sampler));

  auto nsga = nsga2_run(inst, init, stage_seed(h.seed, Stage::nsga2), opts.search);
  OptimizationReport report;
  if (const auto pick = select_deployment(nsga.front)) {
    report = describe(pick->p, inst, SolutionPath::nsga2);
  } else {
    const auto ga_init =
        sample_population(inst.cluster, alloc, h.pop_size, h.omega, stage_seed(h.seed, Stage::ga_sampler));
    auto ga = ga_run(inst, ga_init, stage_seed(h.seed, Stage::ga), opts.search);
    const double floor_violation = penalty(alloc.p_min, inst).total;
    if (ga.best_penalty.total <= 0.0) {
      report = describe(ga.best, inst, SolutionPath::ga_fallback);
    } else if (ga.best_penalty.total < floor_violation) {
      // Still violating, but strictly closer to feasible than p_min.
      report = describe(ga.best, inst, SolutionPath::ga_fallback);
    } else {
      report = describe(alloc.p_min, inst, SolutionPath::min_pruning_fallback);
    }
    report.ga_log = std::move(ga.best_per_generation);
  }
  report.front = std::move(nsga.front);
  report.nsga2_log = std::move(nsga.log);
  if (opts.record_wall_time) {
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return report;
}

inline OptimizationReport optimize(const ClusterSpec& cluster, const ModelSet& models, const Hyperparams& hyper,
                                   const PipelineOptions& opts = {}) {
  return optimize(Instance(cluster, models, hyper), opts);
}

/// The uniform vector (level, ..., level) evaluated with the same models.
inline OptimizationReport uniform_baseline(const Instance& inst, double level) {
  return describe(PruningVector::uniform(inst.views(), level), inst, SolutionPath::uniform_baseline);
}

inline OptimizationReport uniform_baseline(const ClusterSpec& cluster, const ModelSet& models, double level,
                                           const Hyperparams& hyper = {}) {
  return uniform_baseline(Instance(cluster, models, hyper), level);
}

}  // namespace slimedge
