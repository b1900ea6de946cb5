#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace slimedge;

namespace {

// Two views, 100 MB backbone, caps 60 MB.
Instance two_view(double accuracy, double floor) {
  auto c = testing_support::small_cluster(2);
  c.min_accuracy = floor;
  return Instance(c, testing_support::constant_models(accuracy), {});
}

}  // namespace

TEST(Penalty, Examples) {
  const auto ok = two_view(0.7, 0.6);
  EXPECT_DOUBLE_EQ(penalty(PruningVector{0.5, 0.5}, ok).total, 0.0);

  const auto low = two_view(0.59, 0.6);
  EXPECT_NEAR(penalty(PruningVector{0.5, 0.5}, low).total, 100.0, 1e-9);

  // view 1 is 5 MB over its 60 MB cap
  const auto p = penalty(PruningVector{0.5, 0.35}, ok);
  EXPECT_DOUBLE_EQ(p.accuracy_term, 0.0);
  EXPECT_NEAR(p.size_term, 5.0, 1e-12);
  EXPECT_NEAR(p.total, 5.0, 1e-12);
}

TEST(GaRun, FeasibleMinimumIsSeeded) {
  const auto inst = two_view(0.7, 0.6);
  const auto init = sample_population(inst.cluster, allocate(inst.cluster, inst.hyper), 8, 4.0, 1);
  Hyperparams h;
  const auto r = ga_run(inst, init, 2);
  EXPECT_DOUBLE_EQ(r.best_penalty.total, 0.0);
  EXPECT_EQ(r.best_per_generation.size(), h.n_generations + 1);
  EXPECT_DOUBLE_EQ(r.best_per_generation.front(), 0.0);
}

TEST(GaRun, BestPerGenerationNeverRises) {
  auto c = testing_support::exp1_cluster();
  c.min_accuracy = 0.85;
  Hyperparams h;
  h.n_generations = 60;
  const Instance inst(c, default_models(c), h);
  const auto init = sample_population(c, allocate(c, h), h.pop_size, h.omega, 3);
  const auto r = ga_run(inst, init, 4);
  for (std::size_t g = 1; g < r.best_per_generation.size(); ++g) {
    EXPECT_LE(r.best_per_generation[g], r.best_per_generation[g - 1]);
  }
  EXPECT_DOUBLE_EQ(penalty(r.best, inst).total, r.best_penalty.total);
}

TEST(GaRun, SameSeedSameResult) {
  auto c = testing_support::exp1_cluster();
  Hyperparams h;
  h.n_generations = 30;
  const Instance inst(c, testing_support::constant_models(0.8), h);
  const auto init = sample_population(c, allocate(c, h), 16, h.omega, 3);
  const auto a = ga_run(inst, init, 9);
  const auto b = ga_run(inst, init, 9);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.best_per_generation, b.best_per_generation);
}

TEST(GaRun, MatchesExhaustiveMinimumOnGrid) {
  const auto grid = PruningGrid::linspace(0.0, 0.98, 5);
  auto c = testing_support::small_cluster(2);
  c.min_accuracy = 0.89;
  const auto table = std::make_shared<TabularAccuracy>(TabularAccuracy::random(grid, 2, 0.5, 0.85, 31));
  Hyperparams h;
  h.n_generations = 50;
  h.pop_size = 16;
  const Instance inst(c, ModelSet{table, {}}, h);
  double best = std::numeric_limits<double>::infinity();
  const auto p_min = min_pruning(c);
  for (double a : grid.levels()) {
    for (double b : grid.levels()) {
      if (a < p_min[0] || b < p_min[1]) continue;
      best = std::min(best, penalty(PruningVector{a, b}, inst).total);
    }
  }
  const auto init = sample_population(c, allocate(c, h), h.pop_size, h.omega, 1);
  SearchOptions opts;
  opts.grid = grid;
  EXPECT_LE(ga_run(inst, init, 2, opts).best_penalty.total, best + 1e-9);
}
