#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "slimedge/cost_models.hpp"
#include "slimedge/domain.hpp"

namespace slimedge {

/// Smallest p that fits a backbone of `base_mb` into `cap_mb` under the linear
/// size model: max(0, 1 - cap/base), nudged up by ulps until size(p) <= cap
/// holds in floating point.
inline double min_pruning_for(double cap_mb, double base_mb) {
  double p = std::max(0.0, 1.0 - cap_mb / base_mb);
  while (p < 1.0 && base_mb * (1.0 - p) > cap_mb) p = std::nextafter(p, 1.0);
  return p;
}

inline PruningVector min_pruning(const ClusterSpec& cluster) {
  const auto caps = cluster.caps();
  const auto bases = cluster.base_sizes();
  std::vector<double> p(caps.size());
  for (std::size_t v = 0; v < caps.size(); ++v) {
    p[v] = min_pruning_for(caps[v], bases[v]);
    if (p[v] > kMaxPruning) {
      throw error(errc::infeasible_cap, "device for view " + std::to_string(v) + " has cap " + std::to_string(caps[v]) +
                                            " MB, below 1% of its " + std::to_string(bases[v]) + " MB model");
    }
  }
  return PruningVector(std::move(p));
}

/// lambda_v = (1 - I_v)(1 + dPerf_v) / sum_k (1 - I_k)(1 + dPerf_k).
/// With `invert_perf` the performance factor enters as (2 - dPerf_v), so slower
/// devices absorb more of the extra budget. Falls back to uniform weights when
/// every numerator vanishes.
inline std::vector<double> allocation_weights(const ClusterSpec& cluster, bool invert_perf = false) {
  const auto perf = cluster.perf_factors();
  const std::size_t n = perf.size();
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const double perf_term = invert_perf ? 2.0 - perf[v] : 1.0 + perf[v];
    w[v] = std::max(0.0, 1.0 - cluster.importance[v]) * std::max(0.0, perf_term);
    total += w[v];
  }
  if (!(total > 0.0)) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  for (auto& x : w) x /= total;
  return w;
}

struct AllocationResult {
  PruningVector p_min;
  std::vector<double> weights;
  double p_extra_total = 0.0;
  PruningVector p_final;
};

/// Distributes an extra budget lambda_scale * sum(p_min) over the views by
/// weight and caps each view at 0.99.
inline AllocationResult distribute(PruningVector p_min, std::vector<double> weights, double lambda_scale) {
  AllocationResult out;
  out.p_min = std::move(p_min);
  out.weights = std::move(weights);
  double sum_min = 0.0;
  for (double p : out.p_min.values()) sum_min += p;
  out.p_extra_total = lambda_scale * sum_min;
  std::vector<double> final_p(out.p_min.size());
  for (std::size_t v = 0; v < final_p.size(); ++v) {
    final_p[v] = std::min(kMaxPruning, out.p_min[v] + out.weights[v] * out.p_extra_total);
  }
  out.p_final = PruningVector(std::move(final_p));
  return out;
}

inline AllocationResult allocate(const ClusterSpec& cluster, double lambda_scale, bool invert_perf = false) {
  return distribute(min_pruning(cluster), allocation_weights(cluster, invert_perf), lambda_scale);
}

inline AllocationResult allocate(const ClusterSpec& cluster, const Hyperparams& hyper) {
  return allocate(cluster, hyper.lambda_scale, hyper.invert_perf_in_weights);
}

}  // namespace slimedge
