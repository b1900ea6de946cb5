#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "slimedge/moo.hpp"

namespace slimedge {

struct PenaltyValue {
  double accuracy_term = 0.0;  // max(0, A_min - A)
  double size_term = 0.0;      // sum_v max(0, S_v - S_max,v)
  double total = 0.0;          // phi * accuracy_term + size_term

  bool operator==(const PenaltyValue&) const = default;
};

/// Phi * max(0, A_min - A(x)) + sum_v max(0, S_v(x) - S_max,v). Zero iff x is feasible.
inline PenaltyValue penalty(const PruningVector& x, const Instance& inst) {
  PenaltyValue out;
  out.accuracy_term = std::max(0.0, inst.cluster.min_accuracy - (*inst.models.accuracy)(x));
  const auto sizes = model_sizes(x, inst.base_sizes);
  for (std::size_t v = 0; v < sizes.size(); ++v) out.size_term += std::max(0.0, sizes[v] - inst.caps[v]);
  out.total = inst.hyper.phi * out.accuracy_term + out.size_term;
  return out;
}

struct GaResult {
  PruningVector best;
  PenaltyValue best_penalty;
  std::vector<double> best_per_generation;  // index 0 is the initial population
  std::size_t evaluations = 0;
};

/// Penalty-minimizing GA: binary tournament, BLX-alpha crossover, Gaussian
/// mutation, clipping to [p_min, 0.99]^V and one elite carried over.
inline GaResult ga_run(const Instance& inst, const InitialPopulation& init, std::uint64_t seed,
                       const SearchOptions& opts = {}) {
  const std::size_t n = init.size();
  if (n < 2) throw error(errc::population_too_small, "GA needs at least 2 individuals");
  const auto& h = inst.hyper;
  const detail::Coding coding(inst, opts.grid);
  const std::size_t dims = inst.views();
  const double mutation_rate = h.ga_mutation_rate > 0.0 ? h.ga_mutation_rate : 1.0 / static_cast<double>(dims);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, h.ga_sigma);

  GaResult result;
  std::vector<PruningVector> pop;
  std::vector<double> score;
  pop.reserve(n);
  score.reserve(n);
  for (const auto& row : init.rows) {
    pop.push_back(coding.decode(coding.encode(row)));
    score.push_back(penalty(pop.back(), inst).total);
    ++result.evaluations;
  }

  auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(score.begin(), score.end()) - score.begin());
  };
  std::size_t bi = best_index();
  result.best = pop[bi];
  double best_score = score[bi];
  result.best_per_generation.push_back(best_score);

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  auto tournament = [&]() -> const PruningVector& {
    const auto a = pick(rng);
    const auto b = pick(rng);
    return score[a] <= score[b] ? pop[a] : pop[b];
  };

  auto known = [](const std::vector<PruningVector>& set, const PruningVector& p) {
    return std::find(set.begin(), set.end(), p) != set.end();
  };
  // Children that copy a current or already-bred individual are redrawn, up
  // to a per-generation budget, as in nsga2_run.
  const std::size_t retry_budget = detail::kDuplicateRetriesPerIndividual * n;
  for (std::size_t gen = 1; gen <= h.n_generations; ++gen) {
    std::vector<PruningVector> next;
    std::vector<double> next_score;
    next.reserve(n);
    next_score.reserve(n);
    next.push_back(pop[bi]);
    next_score.push_back(score[bi]);
    std::size_t retries = 0;
    while (next.size() < n) {
      const auto& a = tournament();
      const auto& b = tournament();
      const auto xa = coding.encode(a);
      const auto xb = coding.encode(b);
      std::vector<double> child(dims);
      for (std::size_t v = 0; v < dims; ++v) {
        const double lo = std::min(xa[v], xb[v]);
        const double hi = std::max(xa[v], xb[v]);
        const double span = hi - lo;
        const double u = uniform01(rng);
        child[v] = lo - h.blend_alpha * span + u * (1.0 + 2.0 * h.blend_alpha) * span;
        if (uniform01(rng) < mutation_rate) child[v] += noise(rng) * std::max(coding.scale(v), coding.discrete(v) ? 0.5 / h.ga_sigma : 0.0);
      }
      auto p = coding.decode(std::move(child));
      if ((known(pop, p) || known(next, p)) && retries < retry_budget) {
        ++retries;
        continue;
      }
      next.push_back(std::move(p));
      next_score.push_back(penalty(next.back(), inst).total);
      ++result.evaluations;
    }
    pop = std::move(next);
    score = std::move(next_score);
    bi = best_index();
    if (score[bi] < best_score) {
      best_score = score[bi];
      result.best = pop[bi];
    }
    result.best_per_generation.push_back(best_score);
  }
  result.best_penalty = penalty(result.best, inst);
  return result;
}

}  // namespace slimedge
