#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "test_support.hpp"

using namespace slimedge;

namespace {

// One class per dims-1 prototype value; each sample's only view carries `feature`.
FeatureBank scalar_bank(std::vector<int> labels, std::vector<double> features, std::vector<double> prototypes) {
  const std::size_t classes = prototypes.size();
  return FeatureBank(PruningGrid({0.0}), 1, 1, classes, std::move(labels), std::move(features), std::move(prototypes));
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("slimedge_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(SyntheticAccuracy, FlatBelowKneeThenQuadratic) {
  const SyntheticAccuracy m(0.85, {0.5, 0.5}, 0.8, 2.0);
  EXPECT_DOUBLE_EQ(m(PruningVector{0.0, 0.0}), 0.85);
  EXPECT_DOUBLE_EQ(m(PruningVector{0.8, 0.8}), 0.85);
  // 0.85 - 0.5 * 2 * 0.1^2 = 0.84
  EXPECT_NEAR(m(PruningVector{0.9, 0.0}), 0.84, 1e-12);
  EXPECT_NEAR(m(PruningVector{0.9, 0.9}), 0.83, 1e-12);
  EXPECT_THROW(SyntheticAccuracy(0.85, {1.0}, 1.5), error);
}

TEST(SyntheticAccuracy, MonotoneUnderUniformPruning) {
  const auto m = SyntheticAccuracy::for_cluster(testing_support::exp1_cluster());
  double prev = 1.0;
  for (int i = 0; i <= 99; ++i) {
    const double a = m(PruningVector::uniform(12, i / 100.0));
    EXPECT_LE(a, prev);
    EXPECT_GE(a, 0.0);
    prev = a;
  }
}

TEST(PruningGrid, ConstructionAndSnapping) {
  const auto g = PruningGrid::linspace(0.0, 0.98, 5);
  EXPECT_EQ(g.levels(), (std::vector<double>{0.0, 0.245, 0.49, 0.735, 0.98}));
  EXPECT_EQ(g.nearest_index(0.3), 1u);
  EXPECT_EQ(g.nearest_index(0.1225), 0u);  // tie goes low
  EXPECT_EQ(g.nearest_index(2.0), 4u);
  EXPECT_DOUBLE_EQ(g.snap_within(0.1, 0.3, 0.99), 0.49);
  EXPECT_DOUBLE_EQ(g.snap_within(0.5, 0.5, 0.6), 0.5);  // no level inside: clamp
  EXPECT_EQ(PruningGrid::stepped(0.0, 0.98, 0.02).size(), 50u);
  EXPECT_EQ(PruningGrid::ablation().size(), 51u);
  EXPECT_THROW(PruningGrid({0.2, 0.1}), error);
  EXPECT_THROW(PruningGrid(std::vector<double>{}), error);
}

TEST(TabularAccuracy, LooksUpNearestCell) {
  const PruningGrid g({0.0, 0.5});
  const TabularAccuracy t(g, 2, {0.1, 0.2, 0.3, 0.4});
  EXPECT_DOUBLE_EQ(t(PruningVector{0.0, 0.0}), 0.1);
  EXPECT_DOUBLE_EQ(t(PruningVector{0.5, 0.0}), 0.2);
  EXPECT_DOUBLE_EQ(t(PruningVector{0.0, 0.5}), 0.3);
  EXPECT_DOUBLE_EQ(t(PruningVector{0.45, 0.6}), 0.4);
  EXPECT_THROW(TabularAccuracy(g, 2, {0.1}), error);
}

TEST(SampleConfigs, Examples) {
  const auto zeros = sample_configs(PruningGrid({0.0}), 3, 5, 1);
  ASSERT_EQ(zeros.size(), 5u);
  for (const auto& p : zeros) EXPECT_EQ(p, PruningVector::zeros(3));

  const auto g = PruningGrid::ablation();
  const auto many = sample_configs(g, 12, 1000, 9);
  for (const auto& p : many) {
    for (double x : p.values()) EXPECT_TRUE(std::binary_search(g.levels().begin(), g.levels().end(), x));
  }
  EXPECT_EQ(sample_configs(g, 12, 50, 4), sample_configs(g, 12, 50, 4));
  EXPECT_THROW(sample_configs(g, 2, 0, 1), error);
}

TEST(PoolFeatures, ElementwiseMax) {
  const FeatureBank bank(PruningGrid({0.0}), 2, 2, 1, {0}, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0});
  const std::vector<double> p = {0.0, 0.0};
  EXPECT_EQ(pool_features(bank, 0, p), (std::vector<double>{1.0, 1.0}));
  EXPECT_THROW(pool_features(bank, 3, p), error);
}

TEST(PoolFeatures, IdenticalViewsPoolToThemselves) {
  const FeatureBank bank(PruningGrid({0.0}), 3, 3, 1, {0}, {0.2, -1.0, 4.0, 0.2, -1.0, 4.0, 0.2, -1.0, 4.0},
                         {0.0, 0.0, 0.0});
  EXPECT_EQ(pool_features(bank, 0, std::vector<double>(3, 0.0)), (std::vector<double>{0.2, -1.0, 4.0}));
}

TEST(PoolFeatures, MatchesColumnMaxLoop) {
  const auto grid = PruningGrid::linspace(0.0, 0.98, 4);
  const auto bank = FeatureBank::generate(3, grid, 5, {.dims = 6, .classes = 2, .samples_per_class = 3, .noise = 0.3});
  Rng rng(8);
  std::uniform_int_distribution<std::size_t> lvl(0, grid.size() - 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> idx = {lvl(rng), lvl(rng), lvl(rng)};
    const std::vector<double> p = {grid[idx[0]], grid[idx[1]], grid[idx[2]]};
    for (std::size_t s = 0; s < bank.samples(); ++s) {
      const auto pooled = pool_features(bank, s, p);
      for (std::size_t d = 0; d < bank.dims(); ++d) {
        double m = bank.feature(s, 0, idx[0])[d];
        m = std::max(m, bank.feature(s, 1, idx[1])[d]);
        m = std::max(m, bank.feature(s, 2, idx[2])[d]);
        ASSERT_EQ(pooled[d], m);
      }
    }
  }
}

TEST(MeanClassAccuracy, HandCountedCases) {
  const std::vector<double> p = {0.0};
  EXPECT_DOUBLE_EQ(mean_class_accuracy(scalar_bank({0, 1, 2}, {0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}), p), 1.0);
  // class 1 always lands on prototype 0
  EXPECT_DOUBLE_EQ(mean_class_accuracy(scalar_bank({0, 0, 1, 1}, {0.0, 0.0, 0.0, 0.0}, {0.0, 1.0}), p), 0.5);
  // class 0: 1 of 2 right, classes 1 and 2 perfect
  EXPECT_NEAR(mean_class_accuracy(scalar_bank({0, 0, 1, 2}, {0.0, 2.0, 1.0, 2.0}, {0.0, 1.0, 2.0}), p),
              (0.5 + 1.0 + 1.0) / 3.0, 1e-15);
  EXPECT_THROW(mean_class_accuracy(scalar_bank({0, 0}, {0.0, 0.0}, {0.0, 1.0}), p), error);
}

TEST(FeatureBank, AccuracyDegradesWithPruningAndRoundTrips) {
  const auto grid = PruningGrid::linspace(0.0, 0.98, 6);
  auto bank = std::make_shared<FeatureBank>(FeatureBank::generate(4, grid, 21));
  const FeatureBankAccuracy model(bank);
  EXPECT_GT(model(PruningVector::zeros(4)), model(PruningVector::uniform(4, 0.98)));

  const auto stem = scratch_dir("bank") / "bank";
  save_feature_bank(*bank, stem);
  EXPECT_EQ(load_feature_bank(stem), *bank);
}

TEST(Surrogate, ConstantTargetIsReproduced) {
  const testing_support::ConstantAccuracy flat(0.73);
  const auto data = make_dataset(flat, sample_configs(PruningGrid::ablation(), 4, 200, 2));
  const auto s = fit_surrogate(data);
  for (const auto& p : sample_configs(PruningGrid::ablation(), 4, 100, 3)) EXPECT_NEAR(s(p), 0.73, 1e-6);
}

TEST(Surrogate, TooFewExamples) {
  const testing_support::ConstantAccuracy flat(0.5);
  const auto data = make_dataset(flat, sample_configs(PruningGrid::ablation(), 3, 10, 1));
  try {
    fit_surrogate(data);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::insufficient_data);
  }
}

TEST(Surrogate, HeldOutRmseOnSyntheticTruth) {
  const auto cluster = testing_support::exp1_cluster();
  const auto truth = SyntheticAccuracy::for_cluster(cluster);
  const auto grid = PruningGrid::ablation();
  const auto train = make_dataset(truth, sample_configs(grid, 12, 2000, 101));
  const auto test = make_dataset(truth, sample_configs(grid, 12, 500, 202));
  const auto s = fit_surrogate(train);
  EXPECT_GE(s.tree_count(), 200u);
  EXPECT_LT(rmse(s, test), 0.01);
}

TEST(Surrogate, DatasetPersistence) {
  const auto truth = SyntheticAccuracy(0.9, {0.5, 0.5});
  const auto data = make_dataset(truth, sample_configs(PruningGrid::ablation(), 2, 60, 7));
  const auto stem = scratch_dir("dataset") / "acc";
  save_dataset(data, stem, 7);
  const auto back = load_dataset(stem);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].p, data[i].p);
    EXPECT_EQ(back[i].accuracy, data[i].accuracy);
  }
}

TEST(ViewImportance, SymmetricAndDegenerateSalience) {
  const SyntheticAccuracy uniform(0.85, {0.25, 0.25, 0.25, 0.25});
  for (double w : view_importance(uniform, 4, 4000, 1)) EXPECT_NEAR(w, 0.25, 0.02);

  const SyntheticAccuracy one_sided(0.85, {1.0, 0.0});
  const auto w = view_importance(one_sided, 2, 500, 2);
  EXPECT_NEAR(w[0], 1.0, 0.02);
  EXPECT_NEAR(w[1], 0.0, 0.02);

  EXPECT_THROW(view_importance(uniform, 4, 10, 1), error);
}
