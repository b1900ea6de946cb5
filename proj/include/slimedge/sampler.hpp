#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <vector>

#include "slimedge/allocation.hpp"
#include "slimedge/domain.hpp"
#include "slimedge/random.hpp"

namespace slimedge {

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

inline constexpr double kMinBetaAlpha = 1e-3;

/// alpha_v = (1 - I_v) * omega, beta_v = 1. Low-importance views get a larger
/// alpha, skewing their draws toward heavy pruning (when omega > 1).
inline std::vector<BetaParams> beta_params(std::span<const double> importance, double omega) {
  if (!(omega > 0.0)) throw error(errc::invalid_argument, "omega must be > 0");
  std::vector<BetaParams> out(importance.size());
  for (std::size_t v = 0; v < importance.size(); ++v) {
    out[v].alpha = std::max(kMinBetaAlpha, (1.0 - importance[v]) * omega);
    out[v].beta = 1.0;
  }
  return out;
}

enum class RowOrigin { allocated, minimum, perf_biased, aggressive, beta };

constexpr std::string_view to_string(RowOrigin o) noexcept {
  switch (o) {
    case RowOrigin::allocated: return "allocated";
    case RowOrigin::minimum: return "min";
    case RowOrigin::perf_biased: return "perf-biased";
    case RowOrigin::aggressive: return "aggressive";
    case RowOrigin::beta: return "beta";
  }
  return "unknown";
}

struct InitialPopulation {
  std::vector<PruningVector> rows;
  std::vector<RowOrigin> origins;

  std::size_t size() const noexcept { return rows.size(); }
};

/// One row of max(p_min_v, Beta(alpha_v, beta_v)) draws, capped at 0.99.
inline PruningVector beta_row(const PruningVector& p_min, std::span<const BetaParams> params, Rng& rng) {
  std::vector<double> row(p_min.size());
  for (std::size_t v = 0; v < row.size(); ++v) {
    row[v] = std::min(kMaxPruning, std::max(p_min[v], sample_beta(rng, params[v].alpha, params[v].beta)));
  }
  return PruningVector(std::move(row));
}

/// The four structured rows: the allocation result, the minimum vector, a
/// performance-biased scaling of the minimum and one aggressive Beta row.
inline std::vector<PruningVector> seed_rows(const ClusterSpec& cluster, const AllocationResult& alloc, double omega,
                                            Rng& rng) {
  const auto perf = cluster.perf_factors();
  double perf_sum = 0.0;
  for (double f : perf) perf_sum += f;

  std::vector<double> biased(perf.size());
  for (std::size_t v = 0; v < biased.size(); ++v) {
    biased[v] = std::min(kMaxPruning, alloc.p_min[v] * (1.0 + 0.2 * perf[v] / perf_sum));
  }
  const auto params = beta_params(cluster.importance, omega);
  return {alloc.p_final, alloc.p_min, PruningVector(std::move(biased)), beta_row(alloc.p_min, params, rng)};
}

/// N x V starting population: the four seed rows, then i.i.d. Beta rows.
inline InitialPopulation sample_population(const ClusterSpec& cluster, const AllocationResult& alloc, std::size_t n,
                                           double omega, std::uint64_t seed) {
  if (n < 4) throw error(errc::population_too_small, "population needs at least 4 rows, got " + std::to_string(n));
  Rng rng(seed);
  InitialPopulation pop;
  pop.rows = seed_rows(cluster, alloc, omega, rng);
  pop.origins = {RowOrigin::allocated, RowOrigin::minimum, RowOrigin::perf_biased, RowOrigin::aggressive};
  const auto params = beta_params(cluster.importance, omega);
  pop.rows.reserve(n);
  pop.origins.reserve(n);
  for (std::size_t i = 4; i < n; ++i) {
    pop.rows.push_back(beta_row(alloc.p_min, params, rng));
    pop.origins.push_back(RowOrigin::beta);
  }
  return pop;
}

}  // namespace slimedge
