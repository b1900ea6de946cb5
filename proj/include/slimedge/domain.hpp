#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slimedge/error.hpp"

namespace slimedge {

/// Hard upper bound on any per-view pruning fraction.
inline constexpr double kMaxPruning = 0.99;

struct ViewId {
  std::size_t index = 0;
  auto operator<=>(const ViewId&) const = default;
};

struct DeviceProfile {
  ViewId view;
  double perf_factor = 1.0;  // dPerf, dimensionless
  double mem_cap_mb = 0.0;   // maximum model size on this device
  /// Per-view override of the backbone size; the cluster-wide size applies when unset.
  std::optional<double> base_size_mb;

  bool operator==(const DeviceProfile&) const = default;
};

/// One optimization instance: devices (one per view), the unpruned backbone
/// and the accuracy requirement.
struct ClusterSpec {
  std::vector<DeviceProfile> devices;
  double base_model_size_mb = 0.0;
  double base_accuracy = 0.0;
  double min_accuracy = 0.0;
  std::vector<double> importance;

  bool operator==(const ClusterSpec&) const = default;

  std::size_t views() const noexcept { return devices.size(); }

  // Per-view columns in view order. They assume the devices cover every view
  // exactly once, which validate_cluster guarantees.
  std::vector<double> perf_factors() const { return column([](const DeviceProfile& d, double) { return d.perf_factor; }); }
  std::vector<double> caps() const { return column([](const DeviceProfile& d, double) { return d.mem_cap_mb; }); }
  std::vector<double> base_sizes() const {
    return column([](const DeviceProfile& d, double base) { return d.base_size_mb.value_or(base); });
  }

 private:
  template <typename Fn>
  std::vector<double> column(Fn fn) const {
    std::vector<double> out(devices.size(), 0.0);
    for (const auto& d : devices) {
      if (d.view.index < out.size()) out[d.view.index] = fn(d, base_model_size_mb);
    }
    return out;
  }
};

/// Per-view pruning fractions, each in [0, kMaxPruning].
class PruningVector {
 public:
  PruningVector() = default;
  explicit PruningVector(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t v = 0; v < values_.size(); ++v) {
      const double p = values_[v];
      if (!(p >= 0.0 && p <= kMaxPruning)) {
        throw error(errc::out_of_range_pruning,
                    "p[" + std::to_string(v) + "] = " + std::to_string(p) + " outside [0, 0.99]");
      }
    }
  }
  PruningVector(std::initializer_list<double> values) : PruningVector(std::vector<double>(values)) {}

  static PruningVector zeros(std::size_t n) { return PruningVector(std::vector<double>(n, 0.0)); }
  static PruningVector uniform(std::size_t n, double level) { return PruningVector(std::vector<double>(n, level)); }

  /// Clamps into [0, kMaxPruning] instead of rejecting.
  static PruningVector clamped(std::vector<double> values) {
    for (auto& p : values) p = std::clamp(p, 0.0, kMaxPruning);
    return PruningVector(std::move(values));
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t v) const { return values_[v]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }

  auto operator<=>(const PruningVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Tunables for the fitness, allocation, sampling and both evolutionary searches.
/// Zero for sigma_time, mutation_rate, ga_mutation_rate and r_max means "derive
/// from the instance" (0.5 * baseline latency, 1/V, 1/V and the component-maxima bound).
struct Hyperparams {
  double alpha = 1.0;
  double beta = 0.01;
  double gamma = 0.01;
  double delta = 1.0;
  double sigma_r = 0.05;
  double sigma_l = 0.05;
  double sigma_size = 50.0;
  double sigma_time = 0.0;
  double lambda_scale = 0.25;
  double omega = 4.0;
  double kappa_g = 1.0;
  double kappa_l = 1e3;
  double phi = 1e4;
  std::size_t pop_size = 64;
  std::size_t n_generations = 200;
  std::uint64_t seed = 1;

  // NSGA-II variation
  double eta_c = 15.0;
  double crossover_rate = 0.9;
  double eta_m = 20.0;
  double mutation_rate = 0.0;

  // single-objective GA variation
  double blend_alpha = 0.5;
  double ga_sigma = 0.05;
  double ga_mutation_rate = 0.0;

  bool invert_perf_in_weights = false;
  double r_max = 0.0;

  bool operator==(const Hyperparams&) const = default;
};

inline void validate_hyperparams(const Hyperparams& h) {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw error(errc::invalid_argument, std::string(name) + " must be > 0");
  };
  positive(h.alpha, "alpha");
  positive(h.beta, "beta");
  positive(h.gamma, "gamma");
  positive(h.delta, "delta");
  positive(h.sigma_r, "sigma_r");
  positive(h.sigma_l, "sigma_l");
  positive(h.sigma_size, "sigma_size");
  positive(h.omega, "omega");
  positive(h.kappa_g, "kappa_g");
  positive(h.kappa_l, "kappa_l");
  positive(h.phi, "phi");
  if (h.sigma_time < 0.0) throw error(errc::invalid_argument, "sigma_time must be >= 0");
  if (h.lambda_scale < 0.0) throw error(errc::invalid_argument, "lambda_scale must be >= 0");
  if (h.pop_size < 4) throw error(errc::population_too_small, "pop_size must be >= 4");
  if (h.n_generations < 1) throw error(errc::invalid_argument, "n_generations must be >= 1");
}

inline constexpr double kImportanceTolerance = 1e-9;

/// Returns the cluster unchanged when every invariant holds; otherwise throws with
/// the offending field named.
inline const ClusterSpec& validate_cluster(const ClusterSpec& spec) {
  const std::size_t n = spec.devices.size();
  if (n == 0) throw error(errc::missing_view, "cluster has no devices");

  std::vector<bool> seen(n, false);
  for (const auto& d : spec.devices) {
    const auto idx = d.view.index;
    if (idx >= n) {
      throw error(errc::missing_view, "devices[].view = " + std::to_string(idx) + " outside [0, " + std::to_string(n) + ")");
    }
    if (seen[idx]) throw error(errc::duplicate_view, "devices[].view = " + std::to_string(idx) + " appears twice");
    seen[idx] = true;
    if (!(d.perf_factor > 0.0)) {
      throw error(errc::non_positive_perf, "devices[view=" + std::to_string(idx) + "].perf_factor must be > 0");
    }
    if (!(d.mem_cap_mb > 0.0)) {
      throw error(errc::non_positive_memory, "devices[view=" + std::to_string(idx) + "].mem_cap_mb must be > 0");
    }
    if (d.base_size_mb && !(*d.base_size_mb > 0.0)) {
      throw error(errc::invalid_argument, "devices[view=" + std::to_string(idx) + "].base_size_mb must be > 0");
    }
  }
  if (!(spec.base_model_size_mb > 0.0)) throw error(errc::invalid_argument, "base_model_size_mb must be > 0");
  if (!(spec.base_accuracy >= 0.0 && spec.base_accuracy <= 1.0)) {
    throw error(errc::invalid_argument, "base_accuracy must lie in [0, 1]");
  }
  if (!(spec.min_accuracy >= 0.0 && spec.min_accuracy <= 1.0)) {
    throw error(errc::invalid_argument, "min_accuracy must lie in [0, 1]");
  }
  if (spec.min_accuracy > spec.base_accuracy) {
    throw error(errc::accuracy_floor_above_base, "min_accuracy exceeds base_accuracy");
  }
  if (spec.importance.size() != n) {
    throw error(errc::importance_not_normalized,
                "importance has " + std::to_string(spec.importance.size()) + " entries for " + std::to_string(n) + " views");
  }
  double sum = 0.0;
  for (double w : spec.importance) {
    if (!(w >= 0.0)) throw error(errc::importance_not_normalized, "importance entries must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kImportanceTolerance) {
    throw error(errc::importance_not_normalized, "importance sums to " + std::to_string(sum));
  }
  return spec;
}

/// Scales an importance vector to sum 1. Accepts fractions (sum ~1) and
/// percentages (sum ~100, as tables usually list them).
inline std::vector<double> normalize_importance(std::vector<double> importance) {
  double sum = 0.0;
  for (double w : importance) {
    if (!(w >= 0.0)) throw error(errc::importance_not_normalized, "importance entries must be >= 0");
    sum += w;
  }
  const bool fraction = std::abs(sum - 1.0) <= 5e-3;
  const bool percent = std::abs(sum - 100.0) <= 0.5;
  if (!fraction && !percent) {
    throw error(errc::importance_not_normalized,
                "importance sums to " + std::to_string(sum) + " (expected ~1 or ~100)");
  }
  for (auto& w : importance) w /= sum;
  return importance;
}

}  // namespace slimedge
