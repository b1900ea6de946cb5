#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "slimedge/accuracy.hpp"
#include "slimedge/csv.hpp"
#include "slimedge/random.hpp"

namespace slimedge {

struct AccuracySample {
  PruningVector p;
  double accuracy = 0.0;
};

using AccuracyDataset = std::vector<AccuracySample>;

inline AccuracyDataset make_dataset(const AccuracyModel& model, const std::vector<PruningVector>& configs) {
  AccuracyDataset out;
  out.reserve(configs.size());
  for (const auto& p : configs) out.push_back({p, model(p)});
  return out;
}

/// Least-squares regression tree over a row-major feature matrix, grown
/// greedily to a fixed depth.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  /// `order[f]` lists all row indices sorted by feature f; `rows` selects the
  /// training subset.
  void fit(std::span<const double> x, std::size_t n_features, std::span<const double> target,
           const std::vector<std::vector<std::uint32_t>>& order, const std::vector<std::uint32_t>& rows,
           std::size_t max_depth, std::size_t min_leaf) {
    nodes_.clear();
    std::vector<std::int32_t> node_of(target.size(), -1);
    for (auto r : rows) node_of[r] = 0;
    nodes_.push_back({});
    grow(x, n_features, target, order, node_of, 0, 0, max_depth, min_leaf);
  }

  double predict(std::span<const double> features) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }

 private:
  void grow(std::span<const double> x, std::size_t n_features, std::span<const double> target,
            const std::vector<std::vector<std::uint32_t>>& order, std::vector<std::int32_t>& node_of, int node,
            std::size_t depth, std::size_t max_depth, std::size_t min_leaf) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < target.size(); ++r) {
      if (node_of[r] == node) {
        sum += target[r];
        ++count;
      }
    }
    nodes_[static_cast<std::size_t>(node)].value = count ? sum / static_cast<double>(count) : 0.0;
    if (depth >= max_depth || count < 2 * min_leaf) return;

    // Best split maximizes the reduction in squared error, i.e. maximizes
    // sum_L^2/n_L + sum_R^2/n_R.
    const double parent_score = sum * sum / static_cast<double>(count);
    double best_gain = 1e-12 * std::max(1.0, std::abs(parent_score));
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < n_features; ++f) {
      double left_sum = 0.0;
      std::size_t left_n = 0;
      double prev = 0.0;
      for (auto r : order[f]) {
        if (node_of[r] != node) continue;
        const double xv = x[r * n_features + f];
        if (left_n >= min_leaf && count - left_n >= min_leaf && xv > prev) {
          const double right_sum = sum - left_sum;
          const double score = left_sum * left_sum / static_cast<double>(left_n) +
                               right_sum * right_sum / static_cast<double>(count - left_n);
          const double gain = score - parent_score;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (prev + xv);
          }
        }
        left_sum += target[r];
        ++left_n;
        prev = xv;
      }
    }
    if (best_feature < 0) return;

    const int left = static_cast<int>(nodes_.size());
    const int right = left + 1;
    nodes_.push_back({});
    nodes_.push_back({});
    auto& n = nodes_[static_cast<std::size_t>(node)];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = left;
    n.right = right;
    for (std::size_t r = 0; r < target.size(); ++r) {
      if (node_of[r] != node) continue;
      node_of[r] = x[r * n_features + static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right;
    }
    grow(x, n_features, target, order, node_of, left, depth + 1, max_depth, min_leaf);
    grow(x, n_features, target, order, node_of, right, depth + 1, max_depth, min_leaf);
  }

  std::vector<Node> nodes_;
};

struct BoostingOptions {
  std::size_t n_trees = 300;
  std::size_t max_depth = 3;
  std::size_t min_leaf = 5;
  double learning_rate = 0.1;
  double subsample = 1.0;  // row fraction per tree; < 1 draws rows with the seed
  std::uint64_t seed = 0;
};

/// Additive ensemble of shallow least-squares trees (gradient boosting on
/// squared loss) mapping pruning vectors to accuracy.
class SurrogateAccuracy final : public AccuracyModel {
 public:
  double evaluate(std::span<const double> p) const override {
    double y = bias_;
    for (const auto& t : trees_) y += rate_ * t.predict(p);
    return y;
  }

  std::string name() const override { return "surrogate"; }

  std::size_t views() const noexcept { return views_; }
  std::size_t tree_count() const noexcept { return trees_.size(); }
  double training_rmse() const noexcept { return training_rmse_; }

  friend SurrogateAccuracy fit_surrogate(const AccuracyDataset& data, BoostingOptions opt);

 private:
  std::size_t views_ = 0;
  double bias_ = 0.0;
  double rate_ = 0.1;
  double training_rmse_ = 0.0;
  std::vector<RegressionTree> trees_;
};

inline constexpr std::size_t kMinSurrogateExamples = 50;

inline SurrogateAccuracy fit_surrogate(const AccuracyDataset& data, BoostingOptions opt = {}) {
  if (data.size() < kMinSurrogateExamples) {
    throw error(errc::insufficient_data, std::to_string(data.size()) + " examples, need at least " +
                                             std::to_string(kMinSurrogateExamples));
  }
  if (opt.max_depth < 1 || opt.max_depth > 3) throw error(errc::invalid_argument, "tree depth must be in [1, 3]");
  const std::size_t n = data.size();
  const std::size_t v = data.front().p.size();
  std::vector<double> x(n * v);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (data[i].p.size() != v) throw error(errc::invalid_argument, "dataset rows have different lengths");
    std::copy(data[i].p.values().begin(), data[i].p.values().end(), x.begin() + static_cast<std::ptrdiff_t>(i * v));
    y[i] = data[i].accuracy;
  }

  std::vector<std::vector<std::uint32_t>> order(v, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < v; ++f) {
    std::iota(order[f].begin(), order[f].end(), 0u);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x[a * v + f] < x[b * v + f]; });
  }

  SurrogateAccuracy model;
  model.views_ = v;
  model.rate_ = opt.learning_rate;
  model.bias_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, model.bias_);
  std::vector<double> residual(n);
  std::vector<std::uint32_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0u);
  Rng rng(opt.seed);
  for (std::size_t t = 0; t < opt.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
    std::vector<std::uint32_t> rows;
    if (opt.subsample < 1.0) {
      for (auto r : all_rows) {
        if (uniform01(rng) < opt.subsample) rows.push_back(r);
      }
    } else {
      rows = all_rows;
    }
    RegressionTree tree;
    tree.fit(x, v, residual, order, rows, opt.max_depth, opt.min_leaf);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += opt.learning_rate * tree.predict(std::span<const double>(&x[i * v], v));
    }
    model.trees_.push_back(std::move(tree));
  }

  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) sse += (y[i] - pred[i]) * (y[i] - pred[i]);
  model.training_rmse_ = std::sqrt(sse / static_cast<double>(n));
  return model;
}

inline double rmse(const AccuracyModel& model, const AccuracyDataset& data) {
  double sse = 0.0;
  for (const auto& s : data) {
    const double e = model(s.p) - s.accuracy;
    sse += e * e;
  }
  return data.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(data.size()));
}

/// Permutation importance: for each view, the mean absolute change in predicted
/// accuracy when that coordinate alone is redrawn uniformly over [0, 0.98].
/// Probe points and redrawn values are shared across views. The result is
/// normalized to sum 1 (uniform when the model is flat).
inline std::vector<double> view_importance(const AccuracyModel& model, std::size_t views, std::size_t n_probes,
                                           std::uint64_t seed) {
  if (n_probes < 100) throw error(errc::invalid_argument, "view_importance needs at least 100 probes");
  Rng rng(seed);
  std::uniform_real_distribution<double> level(0.0, 0.98);
  std::vector<double> scores(views, 0.0);
  std::vector<double> probe(views);
  for (std::size_t i = 0; i < n_probes; ++i) {
    for (auto& p : probe) p = level(rng);
    const double redraw = level(rng);
    const double reference = model.evaluate(probe);
    for (std::size_t v = 0; v < views; ++v) {
      const double saved = probe[v];
      probe[v] = redraw;
      scores[v] += std::abs(model.evaluate(probe) - reference);
      probe[v] = saved;
    }
  }
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (!(total > 0.0)) return std::vector<double>(views, 1.0 / static_cast<double>(views));
  for (auto& s : scores) s /= total;
  return scores;
}

// Datasets persist as <stem>.json (format, views, rows) plus <stem>.csv with
// columns p0..p{V-1},accuracy.

inline void save_dataset(const AccuracyDataset& data, const std::filesystem::path& stem, std::uint64_t seed = 0) {
  const std::size_t views = data.empty() ? 0 : data.front().p.size();
  nlohmann::json header;
  header["format"] = "slimedge-accuracy-dataset";
  header["version"] = 1;
  header["views"] = views;
  header["rows"] = data.size();
  header["seed"] = seed;
  {
    std::ofstream out(std::filesystem::path(stem).replace_extension(".json"));
    if (!out) throw error(errc::io_error, "cannot write " + stem.string() + ".json");
    out << header.dump(2) << '\n';
  }
  std::ofstream csv(std::filesystem::path(stem).replace_extension(".csv"));
  if (!csv) throw error(errc::io_error, "cannot write " + stem.string() + ".csv");
  for (std::size_t v = 0; v < views; ++v) csv << 'p' << v << ',';
  csv << "accuracy\n";
  for (const auto& s : data) {
    for (double p : s.p.values()) csv << format_number(p) << ',';
    csv << format_number(s.accuracy) << '\n';
  }
}

inline AccuracyDataset load_dataset(const std::filesystem::path& stem) {
  const auto json_path = std::filesystem::path(stem).replace_extension(".json");
  const auto csv_path = std::filesystem::path(stem).replace_extension(".csv");
  std::size_t views = 0;
  if (std::filesystem::exists(json_path)) {
    std::ifstream in(json_path);
    nlohmann::json header;
    try {
      in >> header;
      views = header.at("views").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw error(errc::parse_error, json_path.string() + ": " + e.what());
    }
  }
  const auto rows = read_csv(csv_path);
  AccuracyDataset data;
  data.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 2 || (views && row.size() != views + 1)) {
      throw error(errc::parse_error, csv_path.string() + ": row " + std::to_string(r + 2) + " has wrong width");
    }
    data.push_back({PruningVector(std::vector<double>(row.begin(), row.end() - 1)), row.back()});
  }
  return data;
}

}  // namespace slimedge
