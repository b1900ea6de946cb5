#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "slimedge/domain.hpp"

namespace slimedge {

inline void check_pruning(double p) {
  if (!(p >= 0.0 && p <= kMaxPruning)) {
    throw error(errc::out_of_range_pruning, "pruning fraction " + std::to_string(p) + " outside [0, 0.99]");
  }
}

/// Filter pruning removes weights in proportion, so the stored size is linear in p.
struct SizeModel {
  double base_size_mb = 0.0;

  double operator()(double p) const { return base_size_mb * (1.0 - p); }
};

inline double model_size(double p, double base_mb) {
  check_pruning(p);
  return SizeModel{base_mb}(p);
}

inline std::vector<double> model_sizes(const PruningVector& p, std::span<const double> base_sizes) {
  std::vector<double> out(p.size());
  for (std::size_t v = 0; v < p.size(); ++v) out[v] = SizeModel{base_sizes[v]}(p[v]);
  return out;
}

/// T_v(p) = base_time_units * (1 - p) / perf_v. Only ratios of these times are
/// ever reported, so the unit is arbitrary.
struct LatencyModel {
  double base_time_units = 1.0;

  double operator()(double p, double perf) const { return base_time_units * (1.0 - p) / perf; }
};

struct LatencyProfile {
  std::vector<double> per_view;
  double bottleneck = 0.0;
};

inline LatencyProfile latency(std::span<const double> p, std::span<const double> perf, LatencyModel model = {}) {
  LatencyProfile out;
  out.per_view.resize(p.size());
  for (std::size_t v = 0; v < p.size(); ++v) {
    out.per_view[v] = model(p[v], perf[v]);
    out.bottleneck = std::max(out.bottleneck, out.per_view[v]);
  }
  return out;
}

inline LatencyProfile latency(const PruningVector& p, const ClusterSpec& cluster, LatencyModel model = {}) {
  const auto perf = cluster.perf_factors();
  return latency(p.values(), perf, model);
}

/// Bottleneck latency of the unpruned deployment: base_time / min perf.
inline double baseline_latency(std::span<const double> perf, LatencyModel model = {}) {
  double slowest = 0.0;
  for (double f : perf) slowest = std::max(slowest, model(0.0, f));
  return slowest;
}

/// dPerf_v = (1/t_v) / sum_u (1/t_u).
inline std::vector<double> dperf_from_times(std::span<const double> times) {
  if (times.empty()) throw error(errc::invalid_argument, "no inference times given");
  double total = 0.0;
  for (std::size_t v = 0; v < times.size(); ++v) {
    if (!(times[v] > 0.0)) throw error(errc::non_positive_time, "times[" + std::to_string(v) + "] must be > 0");
    total += 1.0 / times[v];
  }
  std::vector<double> out(times.size());
  for (std::size_t v = 0; v < times.size(); ++v) out[v] = (1.0 / times[v]) / total;
  return out;
}

/// Exponentially decaying iterative pruning schedule: p_i = e^{-k i} / sum_j e^{-k j} * P
/// for i = 0..steps.
inline std::vector<double> schedule(double total_fraction, double decay_rate, std::size_t steps) {
  check_pruning(total_fraction);
  if (!(decay_rate >= 0.0)) throw error(errc::invalid_argument, "decay rate must be >= 0");
  std::vector<double> weights(steps + 1);
  double norm = 0.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    weights[i] = std::exp(-decay_rate * static_cast<double>(i));
    norm += weights[i];
  }
  for (auto& w : weights) w = w / norm * total_fraction;
  return weights;
}

}  // namespace slimedge
