#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "slimedge/csv.hpp"
#include "slimedge/domain.hpp"
#include "slimedge/pipeline.hpp"
#include "slimedge/simlab.hpp"

namespace slimedge {

inline constexpr std::string_view kToolName = "slimedge";
inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

using json = nlohmann::json;

inline void to_json(json& j, const ViewId& v) { j = v.index; }
inline void from_json(const json& j, ViewId& v) { v.index = j.get<std::size_t>(); }

inline void to_json(json& j, const PruningVector& p) { j = p.vec(); }
inline void from_json(const json& j, PruningVector& p) { p = PruningVector(j.get<std::vector<double>>()); }

inline void to_json(json& j, const DeviceProfile& d) {
  j = json{{"view", d.view.index}, {"perf_factor", d.perf_factor}, {"mem_cap_mb", d.mem_cap_mb}};
  if (d.base_size_mb) j["base_size_mb"] = *d.base_size_mb;
}

inline void from_json(const json& j, DeviceProfile& d) {
  d.view.index = j.at("view").get<std::size_t>();
  d.perf_factor = j.at("perf_factor").get<double>();
  d.mem_cap_mb = j.at("mem_cap_mb").get<double>();
  d.base_size_mb.reset();
  if (j.contains("base_size_mb") && !j.at("base_size_mb").is_null()) d.base_size_mb = j.at("base_size_mb").get<double>();
}

inline void to_json(json& j, const ClusterSpec& c) {
  j = json{{"devices", c.devices},
           {"base_model_size_mb", c.base_model_size_mb},
           {"base_accuracy", c.base_accuracy},
           {"min_accuracy", c.min_accuracy},
           {"importance", c.importance}};
}

/// Importance may be given as fractions or percentages. Vectors that already
/// sum to 1 are kept bit-for-bit so files round-trip exactly.
inline void from_json(const json& j, ClusterSpec& c) {
  c.devices = j.at("devices").get<std::vector<DeviceProfile>>();
  c.base_model_size_mb = j.at("base_model_size_mb").get<double>();
  c.base_accuracy = j.at("base_accuracy").get<double>();
  c.min_accuracy = j.at("min_accuracy").get<double>();
  auto importance = j.at("importance").get<std::vector<double>>();
  const double sum = std::accumulate(importance.begin(), importance.end(), 0.0);
  c.importance = std::abs(sum - 1.0) <= kImportanceTolerance ? std::move(importance)
                                                              : normalize_importance(std::move(importance));
}

#define SLIMEDGE_HYPER_FIELDS(X)                                                                                      \
  X(alpha) X(beta) X(gamma) X(delta) X(sigma_r) X(sigma_l) X(sigma_size) X(sigma_time) X(lambda_scale) X(omega)       \
      X(kappa_g) X(kappa_l) X(phi) X(pop_size) X(n_generations) X(seed) X(eta_c) X(crossover_rate) X(eta_m)         \
          X(mutation_rate) X(blend_alpha) X(ga_sigma) X(ga_mutation_rate) X(invert_perf_in_weights) X(r_max)

inline void to_json(json& j, const Hyperparams& h) {
  j = json::object();
#define X(name) j[#name] = h.name;
  SLIMEDGE_HYPER_FIELDS(X)
#undef X
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const json& j, Hyperparams& h) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
#define X(name)                                          \
  if (key == #name) {                                    \
    h.name = value.get<decltype(Hyperparams::name)>();   \
    known = true;                                        \
  }
    SLIMEDGE_HYPER_FIELDS(X)
#undef X
    if (!known) throw error(errc::parse_error, "unknown hyperparameter '" + key + "'");
  }
}

/// Applies one "key=value" override, e.g. "pop_size=32" or "invert_perf_in_weights=true".
inline void apply_override(Hyperparams& h, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw error(errc::parse_error, "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    throw error(errc::parse_error, "override '" + key + "': cannot parse value '" + text + "'");
  }
  try {
    from_json(json{{key, value}}, h);
  } catch (const json::exception& e) {
    throw error(errc::parse_error, "override '" + key + "': " + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_error, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw error(errc::parse_error, path.string() + ": " + e.what());
  }
}

/// Reads and validates a cluster file, naming the file and field on failure.
inline ClusterSpec load_cluster(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  ClusterSpec c;
  try {
    c = j.get<ClusterSpec>();
  } catch (const json::exception& e) {
    throw error(errc::parse_error, path.string() + ": " + e.what());
  }
  validate_cluster(c);
  return c;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << x;
  return out.str();
}

/// Provenance stamped into every output file.
struct RunStamp {
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline RunStamp make_stamp(const json& config, std::uint64_t seed) { return {hex64(fnv1a(config.dump())), seed}; }

inline std::string csv_preamble(const RunStamp& s) {
  return "# tool=" + std::string(kToolName) + " version=" + std::string(kToolVersion) + " config_hash=" +
         s.config_hash + " seed=" + std::to_string(s.seed) + "\n";
}

inline json candidate_json(const Candidate& c) {
  return json{{"p", c.p},
              {"f1", c.objectives.f1},
              {"f2", c.objectives.f2},
              {"f3", c.objectives.f3},
              {"g1", c.constraints.g1},
              {"g2", c.constraints.g2},
              {"feasible", c.feasible()}};
}

inline json report_json(const OptimizationReport& r, const RunStamp& s, const json& config) {
  json front = json::array();
  for (const auto& c : r.front.members) front.push_back(candidate_json(c));
  return json{{"schema_version", kReportSchemaVersion},
              {"tool", kToolName},
              {"version", kToolVersion},
              {"config_hash", s.config_hash},
              {"seed", s.seed},
              {"config", config},
              {"chosen", r.chosen},
              {"path", to_string(r.path)},
              {"feasible", r.feasible()},
              {"sizes_mb", r.sizes_mb},
              {"latencies", r.latencies},
              {"accuracy", r.accuracy},
              {"speedup", r.speedup},
              {"violations", r.violations},
              {"g1", r.constraints.g1},
              {"g2", r.constraints.g2},
              {"penalty", r.penalty.total},
              {"fitness", r.fitness.total},
              {"front_feasible", r.front.feasible},
              {"front", front},
              {"wall_time", r.wall_time_s ? json(*r.wall_time_s) : json(nullptr)}};
}

inline std::string front_csv(const ParetoFront& front, const RunStamp& s) {
  std::ostringstream out;
  out << csv_preamble(s) << "index,f1,f2,f3,g1,g2,feasible";
  const std::size_t dims = front.members.empty() ? 0 : front.members.front().p.size();
  for (std::size_t v = 0; v < dims; ++v) out << ",p" << v;
  out << '\n';
  for (std::size_t i = 0; i < front.members.size(); ++i) {
    const auto& c = front.members[i];
    out << i << ',' << format_number(c.objectives.f1) << ',' << format_number(c.objectives.f2) << ','
        << format_number(c.objectives.f3) << ',' << format_number(c.constraints.g1) << ','
        << format_number(c.constraints.g2) << ',' << (c.feasible() ? 1 : 0);
    for (double p : c.p.values()) out << ',' << format_number(p);
    out << '\n';
  }
  return out.str();
}

inline std::string generations_csv(const std::vector<GenerationStats>& log, const RunStamp& s) {
  std::ostringstream out;
  out << csv_preamble(s) << "generation,best_f1,feasible_count,front_size,mean_f1,min_f2,min_f3,min_violation\n";
  for (const auto& g : log) {
    out << g.generation << ',' << format_number(g.best_f1) << ',' << g.feasible_count << ',' << g.front_size << ','
        << format_number(g.mean_f1) << ',' << format_number(g.min_f2) << ',' << format_number(g.min_f3) << ','
        << format_number(g.min_violation) << '\n';
  }
  return out.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, const RunStamp& s) {
  std::ostringstream out;
  out << csv_preamble(s) << "level,accuracy,size_mb,latency_norm\n";
  for (const auto& r : rows) {
    out << format_number(r.level) << ',' << format_number(r.accuracy) << ',' << format_number(r.size_mb) << ','
        << format_number(r.latency_norm) << '\n';
  }
  return out.str();
}

inline std::string batch_csv(const BatchSummary& b, const RunStamp& s) {
  std::ostringstream out;
  out << csv_preamble(s) << "instance,seed,path,feasible,speedup,violations\n";
  for (const auto& r : b.rows) {
    out << r.instance << ',' << r.seed << ',' << r.path << ',' << (r.feasible ? 1 : 0) << ','
        << format_number(r.speedup) << ',' << r.violations << '\n';
  }
  return out.str();
}

inline json batch_summary_json(const BatchSummary& b, const RunStamp& s) {
  return json{{"schema_version", kReportSchemaVersion},
              {"tool", kToolName},
              {"version", kToolVersion},
              {"config_hash", s.config_hash},
              {"seed", s.seed},
              {"n", b.n},
              {"solved", b.solved},
              {"unsolved", b.n - b.solved},
              {"solved_rate", b.solved_rate()},
              {"solved_ci95", {b.solved_ci.low, b.solved_ci.high}},
              {"paths", b.paths},
              {"mean_violations", b.mean_violations},
              {"max_violations", b.max_violations}};
}

inline std::string vector_csv(std::string_view column, const std::vector<double>& values, const RunStamp& s) {
  std::ostringstream out;
  out << csv_preamble(s) << "view," << column << '\n';
  for (std::size_t v = 0; v < values.size(); ++v) out << v << ',' << format_number(values[v]) << '\n';
  return out.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::io_error, "cannot write " + path.string());
  out << text;
  if (!out) throw error(errc::io_error, "write failed for " + path.string());
}

/// Fixed-width table of the chosen deployment, one row per view.
inline std::string report_table(const OptimizationReport& r, const ClusterSpec& cluster) {
  const auto caps = cluster.caps();
  const auto perf = cluster.perf_factors();
  std::ostringstream out;
  out << "path " << to_string(r.path) << (r.feasible() ? " (feasible)" : " (infeasible)") << '\n';
  out << "accuracy " << format_number(r.accuracy) << "  floor " << format_number(cluster.min_accuracy)
      << "  speedup " << format_number(r.speedup) << "  violations " << r.violations << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%4s %8s %8s %10s %10s %10s\n", "view", "perf", "prune", "size_mb", "cap_mb",
                "latency");
  out << line;
  for (std::size_t v = 0; v < r.chosen.size(); ++v) {
    std::snprintf(line, sizeof line, "%4zu %8.3f %8.4f %10.2f %10.2f %10.4f\n", v, perf[v], r.chosen[v],
                  r.sizes_mb[v], caps[v], r.latencies[v]);
    out << line;
  }
  return out.str();
}

}  // namespace slimedge
