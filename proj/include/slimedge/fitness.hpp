#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <span>
#include <vector>

#include "slimedge/accuracy.hpp"
#include "slimedge/cost_models.hpp"
#include "slimedge/domain.hpp"

namespace slimedge {

/// The accuracy oracle plus the latency model it is paired with.
struct ModelSet {
  std::shared_ptr<const AccuracyModel> accuracy;
  LatencyModel latency{};
};

inline ModelSet default_models(const ClusterSpec& cluster) {
  return {std::make_shared<SyntheticAccuracy>(SyntheticAccuracy::for_cluster(cluster)), LatencyModel{}};
}

inline constexpr double kScoreBand = 1e-2;
inline constexpr double kMinModelSizeMb = 1e-6;

/// R_A as a function of dA = A(P) - A_min. Three branches:
/// near the floor exp(-dA^1.5 / (10 sr^2)), above it exp(-dA / (2 sr^2)),
/// below it exp(-|dA|^1.5 / (2 sl^2)).
inline double score_accuracy(double delta_a, double sigma_r, double sigma_l) {
  if (delta_a >= 0.0 && delta_a <= kScoreBand) return std::exp(-std::pow(delta_a, 1.5) / (10.0 * sigma_r * sigma_r));
  if (delta_a > kScoreBand) return std::exp(-delta_a / (2.0 * sigma_r * sigma_r));
  return std::exp(-std::pow(std::abs(delta_a), 1.5) / (2.0 * sigma_l * sigma_l));
}

/// R_S for one view. Note the jump at dS = -1e-2: the band value is 100, just
/// below it the score is 100 + cap/size.
inline double score_size(double size_mb, double cap_mb, double sigma) {
  const double delta = size_mb - cap_mb;
  if (delta > kScoreBand) return 100.0 * std::exp(-delta * delta / (10.0 * sigma * sigma));
  if (delta >= -kScoreBand) return 100.0;
  if (size_mb <= 0.0) {
    std::clog << "slimedge: warning: ZeroModelSize, size snapped to " << kMinModelSizeMb << " MB\n";
    size_mb = kMinModelSizeMb;
  }
  return 100.0 + cap_mb / size_mb;
}

inline std::vector<double> score_sizes(std::span<const double> sizes, std::span<const double> caps, double sigma) {
  std::vector<double> out(sizes.size());
  for (std::size_t v = 0; v < sizes.size(); ++v) out[v] = score_size(sizes[v], caps[v], sigma);
  return out;
}

/// R_I = 100 exp(-T_max^2 / (2 sigma^2)).
inline double score_time(double max_time, double sigma) {
  return 100.0 * std::exp(-max_time * max_time / (2.0 * sigma * sigma));
}

/// R_B: accuracy surplus plus mean per-view memory slack, granted only when
/// the accuracy floor and every cap hold.
inline double score_feasibility(double accuracy, double min_accuracy, std::span<const double> sizes,
                                std::span<const double> caps) {
  if (accuracy < min_accuracy) return 0.0;
  double slack = 0.0;
  for (std::size_t v = 0; v < sizes.size(); ++v) {
    if (sizes[v] > caps[v]) return 0.0;
    slack += caps[v] - sizes[v];
  }
  return (accuracy - min_accuracy) + slack / static_cast<double>(sizes.size());
}

inline double score_feasibility(double accuracy, const ClusterSpec& cluster, std::span<const double> sizes) {
  const auto caps = cluster.caps();
  return score_feasibility(accuracy, cluster.min_accuracy, sizes, caps);
}

struct FitnessBreakdown {
  double r_acc = 0.0;
  std::vector<double> r_size_per_view;
  double r_size = 0.0;  // mean of r_size_per_view
  double r_time = 0.0;
  double r_feas = 0.0;
  double total = 0.0;

  bool operator==(const FitnessBreakdown&) const = default;
};

/// total = alpha R_acc + beta R_size + gamma R_time + delta R_feas.
inline double weighted_total(double r_acc, double r_size, double r_time, double r_feas, const Hyperparams& h) {
  return h.alpha * r_acc + h.beta * r_size + h.gamma * r_time + h.delta * r_feas;
}

/// Everything about one cluster that evaluation needs, precomputed once.
struct Instance {
  ClusterSpec cluster;
  ModelSet models;
  Hyperparams hyper;
  std::vector<double> perf;
  std::vector<double> caps;
  std::vector<double> base_sizes;
  double t_baseline = 0.0;
  double sigma_time = 0.0;
  double r_max = 0.0;

  Instance(ClusterSpec c, ModelSet m, Hyperparams h)
      : cluster(std::move(c)), models(std::move(m)), hyper(h) {
    validate_cluster(cluster);
    if (!models.accuracy) throw error(errc::invalid_argument, "no accuracy model supplied");
    perf = cluster.perf_factors();
    caps = cluster.caps();
    base_sizes = cluster.base_sizes();
    t_baseline = baseline_latency(perf, models.latency);
    sigma_time = hyper.sigma_time > 0.0 ? hyper.sigma_time : 0.5 * t_baseline;
    r_max = hyper.r_max > 0.0 ? hyper.r_max : fitness_upper_bound();
  }

  std::size_t views() const noexcept { return perf.size(); }

  /// R at the component maxima: R_A = 1, R_I = 100, R_S and the slack term at
  /// full (0.99) pruning, and the accuracy surplus at the unpruned accuracy.
  double fitness_upper_bound() const {
    double rs = 0.0;
    double slack = 0.0;
    for (std::size_t v = 0; v < views(); ++v) {
      const double s = SizeModel{base_sizes[v]}(kMaxPruning);
      rs += std::max(100.0, score_size(s, caps[v], hyper.sigma_size));
      slack += caps[v] - s;
    }
    rs /= static_cast<double>(views());
    const double feas_cap = std::max(0.0, cluster.base_accuracy - cluster.min_accuracy) +
                            std::max(0.0, slack / static_cast<double>(views()));
    return weighted_total(1.0, rs, 100.0, feas_cap, hyper);
  }
};

/// Composes the four scores for p given its accuracy, sizes and bottleneck latency.
inline FitnessBreakdown fitness_from_parts(const Instance& inst, double accuracy, std::span<const double> sizes,
                                           double bottleneck) {
  const auto& h = inst.hyper;
  FitnessBreakdown b;
  b.r_acc = score_accuracy(accuracy - inst.cluster.min_accuracy, h.sigma_r, h.sigma_l);
  b.r_size_per_view = score_sizes(sizes, inst.caps, h.sigma_size);
  double sum = 0.0;
  for (double s : b.r_size_per_view) sum += s;
  b.r_size = sum / static_cast<double>(b.r_size_per_view.size());
  b.r_time = score_time(bottleneck, inst.sigma_time);
  b.r_feas = score_feasibility(accuracy, inst.cluster.min_accuracy, sizes, inst.caps);
  b.total = weighted_total(b.r_acc, b.r_size, b.r_time, b.r_feas, h);
  return b;
}

inline FitnessBreakdown total_fitness(const PruningVector& p, const Instance& inst) {
  const double acc = (*inst.models.accuracy)(p);
  const auto sizes = model_sizes(p, inst.base_sizes);
  const auto lat = latency(p.values(), inst.perf, inst.models.latency);
  return fitness_from_parts(inst, acc, sizes, lat.bottleneck);
}

inline FitnessBreakdown total_fitness(const PruningVector& p, const ClusterSpec& cluster, const ModelSet& models,
                                      const Hyperparams& hyper) {
  return total_fitness(p, Instance(cluster, models, hyper));
}

}  // namespace slimedge
