#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "slimedge/accuracy.hpp"
#include "slimedge/csv.hpp"
#include "slimedge/random.hpp"

namespace slimedge {

/// Dense cache of per-view feature vectors for every (sample, view, pruning level),
/// plus labels and the prototype classifier applied to pooled features.
struct FeatureBankOptions {
  std::size_t dims = 16;
  std::size_t classes = 5;
  std::size_t samples_per_class = 20;
  double noise = 0.35;  // base noise std; scaled by (1 + 4 * level)
};

class FeatureBank {
 public:
  using Options = FeatureBankOptions;

  FeatureBank(PruningGrid grid, std::size_t views, std::size_t dims, std::size_t classes, std::vector<int> labels,
              std::vector<double> features, std::vector<double> prototypes)
      : grid_(std::move(grid)),
        views_(views),
        dims_(dims),
        classes_(classes),
        labels_(std::move(labels)),
        features_(std::move(features)),
        prototypes_(std::move(prototypes)) {
    if (grid_.levels().front() < 0.0 || grid_.levels().back() > 0.98) {
      throw error(errc::invalid_argument, "feature bank grid must lie within [0, 0.98]");
    }
    if (features_.size() != labels_.size() * views_ * grid_.size() * dims_) {
      throw error(errc::invalid_argument, "feature bank is not dense over (sample, view, level)");
    }
    if (prototypes_.size() != classes_ * dims_) throw error(errc::invalid_argument, "prototype matrix has wrong shape");
    for (int y : labels_) {
      if (y < 0 || static_cast<std::size_t>(y) >= classes_) throw error(errc::invalid_argument, "label out of range");
    }
  }

  /// Class centers are random unit vectors; the feature of (s, v, level) is the
  /// center plus Gaussian noise with std noise * (1 + 4 * level). The classifier
  /// prototypes are the per-class means of pooled features at zero pruning.
  static FeatureBank generate(std::size_t views, PruningGrid grid, std::uint64_t seed, Options opt = {}) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> centers(opt.classes * opt.dims);
    for (std::size_t c = 0; c < opt.classes; ++c) {
      double norm = 0.0;
      for (std::size_t d = 0; d < opt.dims; ++d) {
        centers[c * opt.dims + d] = normal(rng);
        norm += centers[c * opt.dims + d] * centers[c * opt.dims + d];
      }
      norm = std::sqrt(norm);
      for (std::size_t d = 0; d < opt.dims; ++d) centers[c * opt.dims + d] /= norm;
    }

    const std::size_t n = opt.classes * opt.samples_per_class;
    std::vector<int> labels(n);
    std::vector<double> features(n * views * grid.size() * opt.dims);
    for (std::size_t s = 0; s < n; ++s) {
      labels[s] = static_cast<int>(s / opt.samples_per_class);
      const double* center = &centers[static_cast<std::size_t>(labels[s]) * opt.dims];
      for (std::size_t v = 0; v < views; ++v) {
        for (std::size_t l = 0; l < grid.size(); ++l) {
          const double sd = opt.noise * (1.0 + 4.0 * grid[l]);
          double* f = &features[((s * views + v) * grid.size() + l) * opt.dims];
          for (std::size_t d = 0; d < opt.dims; ++d) f[d] = center[d] + sd * normal(rng);
        }
      }
    }

    FeatureBank bank(std::move(grid), views, opt.dims, opt.classes, labels, std::move(features),
                     std::vector<double>(opt.classes * opt.dims, 0.0));
    bank.fit_prototypes();
    return bank;
  }

  std::size_t views() const noexcept { return views_; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t classes() const noexcept { return classes_; }
  std::size_t samples() const noexcept { return labels_.size(); }
  const PruningGrid& grid() const noexcept { return grid_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<double>& prototypes() const noexcept { return prototypes_; }

  std::span<const double> feature(std::size_t sample, std::size_t view, std::size_t level) const {
    return {&features_[((sample * views_ + view) * grid_.size() + level) * dims_], dims_};
  }

  /// Nearest classifier prototype (squared Euclidean); ties go to the lower class.
  int classify(std::span<const double> pooled) const {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes_; ++c) {
      double dist = 0.0;
      for (std::size_t d = 0; d < dims_; ++d) {
        const double diff = pooled[d] - prototypes_[c * dims_ + d];
        dist += diff * diff;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(c);
      }
    }
    return best;
  }

  bool operator==(const FeatureBank&) const = default;

 private:
  void fit_prototypes();

  PruningGrid grid_;
  std::size_t views_;
  std::size_t dims_;
  std::size_t classes_;
  std::vector<int> labels_;
  std::vector<double> features_;
  std::vector<double> prototypes_;
};

/// Element-wise maximum over views of f_{s, v, p_v}, with each p_v snapped to
/// the nearest cached level.
inline std::vector<double> pool_features(const FeatureBank& bank, std::size_t sample, std::span<const double> p) {
  if (sample >= bank.samples()) throw error(errc::unknown_sample, "sample " + std::to_string(sample));
  if (p.size() != bank.views()) throw error(errc::invalid_argument, "pruning vector length does not match bank views");
  std::vector<double> pooled(bank.dims(), -std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < bank.views(); ++v) {
    const auto f = bank.feature(sample, v, bank.grid().nearest_index(p[v]));
    for (std::size_t d = 0; d < pooled.size(); ++d) pooled[d] = std::max(pooled[d], f[d]);
  }
  return pooled;
}

/// Macro-averaged per-class accuracy of the prototype classifier on pooled features.
inline double mean_class_accuracy(const FeatureBank& bank, std::span<const double> p) {
  std::vector<std::size_t> correct(bank.classes(), 0);
  std::vector<std::size_t> total(bank.classes(), 0);
  for (std::size_t s = 0; s < bank.samples(); ++s) {
    const auto pooled = pool_features(bank, s, p);
    const auto y = static_cast<std::size_t>(bank.labels()[s]);
    ++total[y];
    if (bank.classify(pooled) == bank.labels()[s]) ++correct[y];
  }
  double acc = 0.0;
  for (std::size_t c = 0; c < bank.classes(); ++c) {
    if (total[c] == 0) throw error(errc::empty_class, "class " + std::to_string(c) + " has no samples");
    acc += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  }
  return acc / static_cast<double>(bank.classes());
}

inline void FeatureBank::fit_prototypes() {
  std::vector<double> sums(classes_ * dims_, 0.0);
  std::vector<std::size_t> counts(classes_, 0);
  const std::vector<double> zero(views_, 0.0);
  for (std::size_t s = 0; s < samples(); ++s) {
    const auto pooled = pool_features(*this, s, zero);
    const auto y = static_cast<std::size_t>(labels_[s]);
    ++counts[y];
    for (std::size_t d = 0; d < dims_; ++d) sums[y * dims_ + d] += pooled[d];
  }
  for (std::size_t c = 0; c < classes_; ++c) {
    if (counts[c] == 0) throw error(errc::empty_class, "class " + std::to_string(c) + " has no samples");
    for (std::size_t d = 0; d < dims_; ++d) prototypes_[c * dims_ + d] = sums[c * dims_ + d] / static_cast<double>(counts[c]);
  }
}

class FeatureBankAccuracy final : public AccuracyModel {
 public:
  explicit FeatureBankAccuracy(std::shared_ptr<const FeatureBank> bank) : bank_(std::move(bank)) {}

  double evaluate(std::span<const double> p) const override { return mean_class_accuracy(*bank_, p); }
  std::string name() const override { return "feature-bank"; }

  const FeatureBank& bank() const noexcept { return *bank_; }

 private:
  std::shared_ptr<const FeatureBank> bank_;
};

// On disk a bank is <stem>.json (shape, grid, labels, prototypes) next to
// <stem>.csv with one row per (sample, view, level): sample,view,level,f0..f{D-1}.

inline void save_feature_bank(const FeatureBank& bank, const std::filesystem::path& stem) {
  nlohmann::json header;
  header["format"] = "slimedge-feature-bank";
  header["version"] = 1;
  header["views"] = bank.views();
  header["dims"] = bank.dims();
  header["classes"] = bank.classes();
  header["samples"] = bank.samples();
  header["grid"] = bank.grid().levels();
  header["labels"] = bank.labels();
  header["prototypes"] = bank.prototypes();
  {
    std::ofstream out(std::filesystem::path(stem).replace_extension(".json"));
    if (!out) throw error(errc::io_error, "cannot write " + stem.string() + ".json");
    out << header.dump(2) << '\n';
  }
  std::ofstream csv(std::filesystem::path(stem).replace_extension(".csv"));
  if (!csv) throw error(errc::io_error, "cannot write " + stem.string() + ".csv");
  csv << "sample,view,level";
  for (std::size_t d = 0; d < bank.dims(); ++d) csv << ",f" << d;
  csv << '\n';
  for (std::size_t s = 0; s < bank.samples(); ++s) {
    for (std::size_t v = 0; v < bank.views(); ++v) {
      for (std::size_t l = 0; l < bank.grid().size(); ++l) {
        csv << s << ',' << v << ',' << l;
        for (double x : bank.feature(s, v, l)) csv << ',' << format_number(x);
        csv << '\n';
      }
    }
  }
}

inline FeatureBank load_feature_bank(const std::filesystem::path& stem) {
  const auto json_path = std::filesystem::path(stem).replace_extension(".json");
  const auto csv_path = std::filesystem::path(stem).replace_extension(".csv");
  std::ifstream in(json_path);
  if (!in) throw error(errc::io_error, "cannot read " + json_path.string());
  nlohmann::json header;
  try {
    in >> header;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::parse_error, json_path.string() + ": " + e.what());
  }
  const auto views = header.at("views").get<std::size_t>();
  const auto dims = header.at("dims").get<std::size_t>();
  const auto classes = header.at("classes").get<std::size_t>();
  PruningGrid grid(header.at("grid").get<std::vector<double>>());
  auto labels = header.at("labels").get<std::vector<int>>();
  auto prototypes = header.at("prototypes").get<std::vector<double>>();

  std::vector<double> features(labels.size() * views * grid.size() * dims, 0.0);
  const auto rows = read_csv(csv_path);
  if (rows.size() != labels.size() * views * grid.size()) {
    throw error(errc::parse_error, csv_path.string() + ": expected " + std::to_string(labels.size() * views * grid.size()) +
                                       " rows, found " + std::to_string(rows.size()));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3 + dims) throw error(errc::parse_error, csv_path.string() + ": row " + std::to_string(r + 2) + " has wrong width");
    const auto s = static_cast<std::size_t>(row[0]);
    const auto v = static_cast<std::size_t>(row[1]);
    const auto l = static_cast<std::size_t>(row[2]);
    if (s >= labels.size() || v >= views || l >= grid.size()) {
      throw error(errc::parse_error, csv_path.string() + ": row " + std::to_string(r + 2) + " index out of range");
    }
    std::copy(row.begin() + 3, row.end(), features.begin() + static_cast<std::ptrdiff_t>(((s * views + v) * grid.size() + l) * dims));
  }
  return FeatureBank(std::move(grid), views, dims, classes, std::move(labels), std::move(features), std::move(prototypes));
}

}  // namespace slimedge
