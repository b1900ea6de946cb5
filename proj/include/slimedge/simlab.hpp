#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "slimedge/accuracy.hpp"
#include "slimedge/allocation.hpp"
#include "slimedge/pipeline.hpp"
#include "slimedge/random.hpp"

namespace slimedge {

inline constexpr double kBackboneSizeMb = 506.8;
inline constexpr double kBackboneAccuracy = 0.85;

/// Per-view salience in percent; sums to 99.9 and is renormalized on use.
inline constexpr std::array<double, 12> kViewImportancePercent = {7.2, 10.5, 7.9, 7.7, 7.8, 8.6,
                                                                   9.1, 8.7, 8.6, 7.6, 8.3, 7.9};

inline std::vector<double> view_importance_profile() {
  return normalize_importance(std::vector<double>(kViewImportancePercent.begin(), kViewImportancePercent.end()));
}

struct PresetTable {
  std::string_view id;
  std::string_view title;
  double min_accuracy;
  std::array<double, 12> perf;
  std::array<double, 12> mem_mb;
};

inline constexpr std::array<PresetTable, 5> kPresetTables = {{
    {"exp1", "heterogeneous cluster", 0.831,
     {0.28, 0.73, 0.04, 0.89, 0.11, 0.07, 0.83, 0.07, 0.07, 0.06, 0.37, 0.34},
     {253.93, 279.01, 285.67, 111.87, 279.54, 154.85, 355.08, 388.48, 404.61, 125.29, 381.24, 398.47}},
    {"exp2", "three-tier single-board devices", 0.80,
     {0.052, 0.052, 0.104, 0.067, 0.067, 0.104, 0.104, 0.104, 0.067, 0.067, 0.104, 0.104},
     {128, 128, 256, 512, 512, 256, 256, 256, 512, 512, 256, 256}},
    {"exp3", "tight memory, high floor", 0.85,
     {0.89, 0.11, 0.88, 0.61, 0.71, 0.55, 0.46, 0.67, 0.74, 0.29, 0.66, 0.59},
     {143.6, 434.5, 334.5, 100.5, 444.6, 181.2, 366.1, 215.5, 266.4, 279.2, 173.4, 411.4}},
    {"exp4", "low-tier devices, high floor", 0.85,
     {0.10, 0.10, 0.05, 0.05, 0.05, 0.10, 0.10, 0.10, 0.07, 0.07, 0.10, 0.10},
     {256, 256, 128, 128, 128, 256, 256, 256, 512, 512, 256, 256}},
    {"exp5", "relaxed memory, latency focus", 0.84,
     {0.02, 0.03, 0.33, 0.81, 0.49, 0.21, 0.18, 0.46, 0.08, 0.71, 0.86, 0.48},
     {405.4, 343.1, 242.6, 119.3, 273.9, 436.3, 103.8, 246.4, 396.2, 356.4, 111.1, 297.2}},
}};

inline const PresetTable& preset_table(std::string_view id) {
  for (const auto& t : kPresetTables) {
    if (t.id == id) return t;
  }
  throw error(errc::invalid_argument, "unknown preset '" + std::string(id) + "' (expected exp1..exp5)");
}

inline ClusterSpec preset_cluster(std::string_view id) {
  const auto& t = preset_table(id);
  ClusterSpec c;
  c.base_model_size_mb = kBackboneSizeMb;
  c.base_accuracy = kBackboneAccuracy;
  c.min_accuracy = t.min_accuracy;
  c.importance = view_importance_profile();
  for (std::size_t v = 0; v < t.perf.size(); ++v) c.devices.push_back({ViewId{v}, t.perf[v], t.mem_mb[v], std::nullopt});
  validate_cluster(c);
  return c;
}

inline OptimizationReport run_preset(std::string_view id, const ModelSet& models, const Hyperparams& hyper,
                                     const PipelineOptions& opts = {}) {
  return optimize(preset_cluster(id), models, hyper, opts);
}

inline OptimizationReport run_preset(std::string_view id, const Hyperparams& hyper = {}) {
  const auto cluster = preset_cluster(id);
  return optimize(cluster, default_models(cluster), hyper);
}

/// Random cluster generator. Floors are base_accuracy * Beta(a), caps are
/// base_size * Beta(c), performance factors uniform in [perf_lo, perf_hi].
struct RandomInstanceSpec {
  std::size_t views = 12;
  double base_size_mb = kBackboneSizeMb;
  double base_accuracy = kBackboneAccuracy;
  double acc_alpha = 5.0;
  double acc_beta = 2.0;
  double cap_alpha = 2.0;
  double cap_beta = 2.0;
  double perf_lo = 0.02;
  double perf_hi = 1.0;
  std::uint64_t seed = 1;
};

/// Importance is the tabulated profile when there are 12 views, uniform otherwise.
inline ClusterSpec random_cluster(const RandomInstanceSpec& spec, std::uint64_t seed) {
  if (spec.views == 0) throw error(errc::invalid_argument, "random instance needs at least one view");
  if (!(spec.perf_lo > 0.0) || spec.perf_hi < spec.perf_lo) throw error(errc::invalid_argument, "bad perf range");
  Rng rng(seed);
  ClusterSpec c;
  c.base_model_size_mb = spec.base_size_mb;
  c.base_accuracy = spec.base_accuracy;
  c.min_accuracy = spec.base_accuracy * sample_beta(rng, spec.acc_alpha, spec.acc_beta);
  std::uniform_real_distribution<double> perf(spec.perf_lo, spec.perf_hi);
  for (std::size_t v = 0; v < spec.views; ++v) {
    double cap = spec.base_size_mb * sample_beta(rng, spec.cap_alpha, spec.cap_beta);
    if (!(cap > 0.0)) cap = std::numeric_limits<double>::min();
    const double f = perf(rng);
    c.devices.push_back({ViewId{v}, f, cap, std::nullopt});
  }
  c.importance = spec.views == kViewImportancePercent.size()
                     ? view_importance_profile()
                     : std::vector<double>(spec.views, 1.0 / static_cast<double>(spec.views));
  validate_cluster(c);
  return c;
}

struct SweepRow {
  double level = 0.0;
  double accuracy = 0.0;
  double size_mb = 0.0;
  double latency_norm = 0.0;
};

/// Uniform pruning at every grid level. Latency is min-max normalized over the
/// grid (1.0 everywhere when the grid has a single distinct latency).
inline std::vector<SweepRow> sweep_uniform(const ClusterSpec& cluster, const ModelSet& models, const PruningGrid& grid) {
  validate_cluster(cluster);
  const auto perf = cluster.perf_factors();
  std::vector<SweepRow> rows;
  std::vector<double> raw;
  for (double level : grid.levels()) {
    const auto p = PruningVector::uniform(perf.size(), level);
    SweepRow r;
    r.level = level;
    r.accuracy = (*models.accuracy)(p);
    r.size_mb = model_size(level, cluster.base_model_size_mb);
    rows.push_back(r);
    raw.push_back(latency(p.values(), perf, models.latency).bottleneck);
  }
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].latency_norm = *hi > *lo ? (raw[i] - *lo) / (*hi - *lo) : 1.0;
  }
  return rows;
}

struct BatchRow {
  std::size_t instance = 0;
  std::uint64_t seed = 0;
  std::string path;  // a SolutionPath name, or "infeasible_cap"
  bool feasible = false;
  bool solved = false;
  double speedup = 0.0;
  std::size_t violations = 0;
};

struct WilsonInterval {
  double low = 0.0;
  double high = 0.0;
};

/// 95% Wilson score interval for k successes out of n.
inline WilsonInterval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct BatchSummary {
  std::size_t n = 0;
  std::size_t solved = 0;
  std::map<std::string, std::size_t> paths;
  double mean_violations = 0.0;
  std::size_t max_violations = 0;
  WilsonInterval solved_ci;
  std::vector<BatchRow> rows;

  double solved_rate() const noexcept { return n ? static_cast<double>(solved) / static_cast<double>(n) : 0.0; }
};

using ModelFactory = std::function<ModelSet(const ClusterSpec&)>;

/// Seeds for instance i: the cluster draws from split(seed, i), the optimizer
/// from split(that, 1). Serial and threaded runs therefore agree.
inline BatchRow run_batch_instance(const RandomInstanceSpec& spec, std::size_t i, const Hyperparams& hyper,
                                   const ModelFactory& factory) {
  BatchRow row;
  row.instance = i;
  row.seed = split_seed(spec.seed, i);
  const auto cluster = random_cluster(spec, row.seed);
  try {
    const auto p_min = min_pruning(cluster);
    Hyperparams h = hyper;
    h.seed = split_seed(row.seed, 1);
    const auto report = optimize(cluster, factory(cluster), h);
    row.path = std::string(to_string(report.path));
    row.feasible = report.feasible();
    row.speedup = report.speedup;
    row.violations = report.violations;
    const Instance inst(cluster, factory(cluster), h);
    row.solved = report.path != SolutionPath::min_pruning_fallback || evaluate_candidate(p_min, inst).feasible();
  } catch (const error& e) {
    if (e.code() != errc::infeasible_cap) throw;
    row.path = "infeasible_cap";
    const auto caps = cluster.caps();
    const auto bases = cluster.base_sizes();
    for (std::size_t v = 0; v < caps.size(); ++v) {
      if (min_pruning_for(caps[v], bases[v]) > kMaxPruning) ++row.violations;
    }
  }
  return row;
}

inline BatchSummary robustness_batch(const RandomInstanceSpec& spec, std::size_t n, const Hyperparams& hyper = {},
                                     std::size_t threads = 1, ModelFactory factory = default_models) {
  if (n < 1) throw error(errc::invalid_argument, "batch size must be >= 1");
  BatchSummary s;
  s.n = n;
  s.rows.resize(n);
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) s.rows[i] = run_batch_instance(spec, i, hyper, factory);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> failures(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) s.rows[i] = run_batch_instance(spec, i, hyper, factory);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  double total_violations = 0.0;
  for (const auto& r : s.rows) {
    if (r.solved) ++s.solved;
    ++s.paths[r.path];
    total_violations += static_cast<double>(r.violations);
    s.max_violations = std::max(s.max_violations, r.violations);
  }
  s.mean_violations = total_violations / static_cast<double>(n);
  s.solved_ci = wilson_interval(s.solved, n);
  return s;
}

}  // namespace slimedge
