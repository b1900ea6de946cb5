#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "slimedge/domain.hpp"
#include "slimedge/random.hpp"

namespace slimedge {

/// Mean-class-accuracy oracle A(P). Implementations are immutable once built,
/// so evaluate may be called concurrently.
class AccuracyModel {
 public:
  virtual ~AccuracyModel() = default;

  virtual double evaluate(std::span<const double> p) const = 0;
  virtual std::string name() const = 0;

  double operator()(const PruningVector& p) const { return evaluate(p.values()); }
};

/// Sorted set of discrete pruning levels.
class PruningGrid {
 public:
  PruningGrid() = default;
  explicit PruningGrid(std::vector<double> levels, double upper = kMaxPruning) : levels_(std::move(levels)) {
    if (levels_.empty()) throw error(errc::invalid_argument, "pruning grid is empty");
    if (!std::is_sorted(levels_.begin(), levels_.end())) throw error(errc::invalid_argument, "pruning grid must be sorted");
    if (std::adjacent_find(levels_.begin(), levels_.end()) != levels_.end()) {
      throw error(errc::invalid_argument, "pruning grid has duplicate levels");
    }
    if (levels_.front() < 0.0 || levels_.back() > upper) {
      throw error(errc::invalid_argument, "pruning grid levels must lie in [0, " + std::to_string(upper) + "]");
    }
  }

  /// `count` evenly spaced levels from lo to hi inclusive.
  static PruningGrid linspace(double lo, double hi, std::size_t count) {
    if (count == 0) throw error(errc::invalid_argument, "grid needs at least one level");
    std::vector<double> levels(count);
    for (std::size_t i = 0; i < count; ++i) {
      levels[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    if (count > 1) levels.back() = hi;
    return PruningGrid(std::move(levels));
  }

  /// lo, lo + step, ... up to hi inclusive (with a half-step tolerance on hi).
  static PruningGrid stepped(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw error(errc::invalid_argument, "grid needs step > 0 and hi >= lo");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    std::vector<double> levels(count);
    for (std::size_t i = 0; i < count; ++i) levels[i] = lo + step * static_cast<double>(i);
    levels.back() = std::min(levels.back(), hi);
    return PruningGrid(std::move(levels));
  }

  /// The 51-level ablation grid, 0 to 0.98.
  static PruningGrid ablation() { return linspace(0.0, 0.98, 51); }

  std::size_t size() const noexcept { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<double>& levels() const noexcept { return levels_; }

  /// Index of the level nearest to p; ties resolve to the lower level.
  std::size_t nearest_index(double p) const {
    auto it = std::lower_bound(levels_.begin(), levels_.end(), p);
    if (it == levels_.begin()) return 0;
    if (it == levels_.end()) return levels_.size() - 1;
    const auto hi = static_cast<std::size_t>(it - levels_.begin());
    return (p - levels_[hi - 1] <= levels_[hi] - p) ? hi - 1 : hi;
  }

  double snap(double p) const { return levels_[nearest_index(p)]; }

  /// Nearest level inside [lo, hi]; falls back to clamping when the box holds no level.
  double snap_within(double p, double lo, double hi) const {
    auto first = std::lower_bound(levels_.begin(), levels_.end(), lo);
    auto last = std::upper_bound(levels_.begin(), levels_.end(), hi);
    if (first >= last) return std::clamp(p, lo, hi);
    double best = *first;
    for (auto it = first; it != last; ++it) {
      if (std::abs(*it - p) < std::abs(best - p)) best = *it;
    }
    return best;
  }

  bool operator==(const PruningGrid&) const = default;

 private:
  std::vector<double> levels_;
};

/// Analytic stand-in for a trained multi-view network:
///   A(P) = clamp(A0 - sum_v I_v * severity * max(0, p_v - knee)^2, 0, 1).
/// Accuracy is flat up to the knee, then falls off quadratically per view,
/// scaled by that view's importance.
class SyntheticAccuracy final : public AccuracyModel {
 public:
  static constexpr double kDefaultBase = 0.85;
  static constexpr double kDefaultKnee = 0.81;
  static constexpr double kDefaultSeverity = 3.5;

  SyntheticAccuracy(double base_accuracy, std::vector<double> importance, double knee = kDefaultKnee,
                    double severity = kDefaultSeverity)
      : base_(base_accuracy), knee_(knee), severity_(severity), importance_(std::move(importance)) {
    if (!(severity_ >= 0.0)) throw error(errc::invalid_argument, "severity must be >= 0");
    if (!(knee_ >= 0.0 && knee_ <= 1.0)) throw error(errc::invalid_argument, "knee must lie in [0, 1]");
  }

  /// Default calibration for a cluster: its base accuracy and importance profile.
  static SyntheticAccuracy for_cluster(const ClusterSpec& cluster) {
    return SyntheticAccuracy(cluster.base_accuracy, cluster.importance);
  }

  double evaluate(std::span<const double> p) const override {
    double loss = 0.0;
    for (std::size_t v = 0; v < p.size() && v < importance_.size(); ++v) {
      const double excess = std::max(0.0, p[v] - knee_);
      loss += importance_[v] * severity_ * excess * excess;
    }
    return std::clamp(base_ - loss, 0.0, 1.0);
  }

  std::string name() const override { return "synthetic"; }

  double base_accuracy() const noexcept { return base_; }
  double knee() const noexcept { return knee_; }
  double severity() const noexcept { return severity_; }
  const std::vector<double>& importance() const noexcept { return importance_; }

 private:
  double base_;
  double knee_;
  double severity_;
  std::vector<double> importance_;
};

/// Accuracy looked up from a dense table over grid^V; each coordinate snaps to
/// its nearest grid level. Used for exhaustively checkable instances.
class TabularAccuracy final : public AccuracyModel {
 public:
  TabularAccuracy(PruningGrid grid, std::size_t views, std::vector<double> table)
      : grid_(std::move(grid)), views_(views), table_(std::move(table)) {
    std::size_t expected = 1;
    for (std::size_t v = 0; v < views_; ++v) expected *= grid_.size();
    if (table_.size() != expected) {
      throw error(errc::invalid_argument, "accuracy table has " + std::to_string(table_.size()) + " entries, expected " +
                                              std::to_string(expected));
    }
  }

  /// i.i.d. uniform accuracies in [lo, hi] for every grid vector.
  static TabularAccuracy random(PruningGrid grid, std::size_t views, double lo, double hi, std::uint64_t seed) {
    std::size_t cells = 1;
    for (std::size_t v = 0; v < views; ++v) cells *= grid.size();
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> table(cells);
    for (auto& a : table) a = dist(rng);
    return TabularAccuracy(std::move(grid), views, std::move(table));
  }

  std::size_t index_of(std::span<const double> p) const {
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (std::size_t v = 0; v < views_; ++v) {
      idx += grid_.nearest_index(p[v]) * stride;
      stride *= grid_.size();
    }
    return idx;
  }

  double evaluate(std::span<const double> p) const override { return table_[index_of(p)]; }
  std::string name() const override { return "tabular"; }

  const PruningGrid& grid() const noexcept { return grid_; }

 private:
  PruningGrid grid_;
  std::size_t views_;
  std::vector<double> table_;
};

/// i.i.d. uniform draws from grid^V; deterministic per seed.
inline std::vector<PruningVector> sample_configs(const PruningGrid& grid, std::size_t views, std::size_t count,
                                                 std::uint64_t seed) {
  if (count < 1) throw error(errc::invalid_argument, "count must be >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  std::vector<PruningVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> row(views);
    for (auto& p : row) p = std::min(grid[pick(rng)], kMaxPruning);
    out.emplace_back(std::move(row));
  }
  return out;
}

}  // namespace slimedge
