// Command-line front end: optimize, sweep, batch, importance, dataset, presets.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slimedge/slimedge.hpp"

namespace fs = std::filesystem;
using namespace slimedge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolations = 2;

constexpr std::size_t kDefaultDatasetSize = 2000;
constexpr std::size_t kDefaultProbes = 500;

struct CommonArgs {
  std::string preset;
  std::string cluster_file;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string model = "synthetic";
  std::vector<std::string> hyper;
};

void add_cluster_flags(CLI::App* cmd, CommonArgs& a) {
  auto* preset = cmd->add_option("--preset", a.preset, "embedded experiment preset (exp1..exp5)");
  auto* cluster = cmd->add_option("--cluster", a.cluster_file, "cluster JSON file");
  preset->excludes(cluster);
}

void add_run_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--seed", a.seed, "RNG seed (falls back to $SLIMEDGE_SEED, then 1)");
  cmd->add_option("--out", a.out, "output directory")->capture_default_str();
  cmd->add_option("--hyper", a.hyper, "hyperparameter override key=value (repeatable)");
}

void add_model_flag(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--model", a.model, "accuracy model: synthetic | feature-bank | surrogate:<dataset stem>")
      ->capture_default_str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SLIMEDGE_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw error(errc::parse_error, "SLIMEDGE_SEED='" + std::string(env) + "' is not an unsigned integer");
    }
  }
  return 1;
}

Hyperparams resolve_hyper(const CommonArgs& a, std::uint64_t seed) {
  Hyperparams h;
  for (const auto& kv : a.hyper) apply_override(h, kv);
  h.seed = seed;
  validate_hyperparams(h);
  return h;
}

ClusterSpec resolve_cluster(const CommonArgs& a, std::string_view fallback_preset = {}) {
  if (!a.cluster_file.empty()) {
    if (!fs::exists(a.cluster_file)) throw error(errc::io_error, "cluster file not found: " + a.cluster_file);
    return load_cluster(a.cluster_file);
  }
  if (!a.preset.empty()) return preset_cluster(a.preset);
  if (!fallback_preset.empty()) return preset_cluster(fallback_preset);
  throw error(errc::invalid_argument, "one of --preset or --cluster is required");
}

/// "lo:hi:step" -> inclusive stepped grid.
PruningGrid parse_grid(const std::string& text) {
  const auto fields = split_fields(text, ':');
  if (fields.size() != 3) throw error(errc::parse_error, "--grid expects lo:hi:step, got '" + text + "'");
  return PruningGrid::stepped(parse_number(fields[0]), parse_number(fields[1]), parse_number(fields[2]));
}

AccuracyDataset training_data(const AccuracyModel& truth, std::size_t views, std::size_t n, std::uint64_t seed) {
  return make_dataset(truth, sample_configs(PruningGrid::ablation(), views, n, split_seed(seed, 11)));
}

/// Builds the selected accuracy model for `cluster`.
ModelSet resolve_models(const std::string& spec, const ClusterSpec& cluster, std::uint64_t seed) {
  if (spec == "synthetic") return default_models(cluster);
  if (spec == "feature-bank") {
    auto bank = std::make_shared<const FeatureBank>(
        FeatureBank::generate(cluster.views(), PruningGrid::ablation(), split_seed(seed, 12)));
    return {std::make_shared<FeatureBankAccuracy>(std::move(bank)), LatencyModel{}};
  }
  constexpr std::string_view prefix = "surrogate:";
  if (spec.rfind(prefix, 0) == 0) {
    const fs::path stem = spec.substr(prefix.size());
    const auto data = load_dataset(stem);
    if (!data.empty() && data.front().p.size() != cluster.views()) {
      throw error(errc::invalid_argument, "dataset " + stem.string() + " has " +
                                              std::to_string(data.front().p.size()) + " views, cluster has " +
                                              std::to_string(cluster.views()));
    }
    BoostingOptions opt;
    opt.seed = split_seed(seed, 13);
    return {std::make_shared<SurrogateAccuracy>(fit_surrogate(data, opt)), LatencyModel{}};
  }
  throw error(errc::invalid_argument, "unknown model '" + spec + "' (synthetic | feature-bank | surrogate:<stem>)");
}

json base_config(const std::string& command, const CommonArgs& a, const ClusterSpec& cluster, const Hyperparams& h) {
  return json{{"command", command}, {"preset", a.preset}, {"model", a.model}, {"cluster", cluster}, {"hyper", h}};
}

fs::path prepare_out(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw error(errc::io_error, "cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

int cmd_optimize(const CommonArgs& a, const std::string& grid_text, bool timing, bool archive) {
  const auto seed = resolve_seed(a.seed);
  const auto hyper = resolve_hyper(a, seed);
  const auto cluster = resolve_cluster(a);
  const auto models = resolve_models(a.model, cluster, seed);
  PipelineOptions opts;
  opts.record_wall_time = timing;
  opts.search.archive = archive;
  if (!grid_text.empty()) opts.search.grid = parse_grid(grid_text);

  const auto report = optimize(cluster, models, hyper, opts);
  auto config = base_config("optimize", a, cluster, hyper);
  config["grid"] = grid_text;
  config["archive"] = archive;
  const auto stamp = make_stamp(config, seed);

  const auto out = prepare_out(a.out);
  write_text(out / "report.json", report_json(report, stamp, config).dump(2) + "\n");
  write_text(out / "front.csv", front_csv(report.front, stamp));
  write_text(out / "generations.csv", generations_csv(report.nsga2_log, stamp));
  std::cout << report_table(report, cluster);
  return report.feasible() ? kExitOk : kExitViolations;
}

int cmd_sweep(const CommonArgs& a, const std::string& grid_text) {
  const auto seed = resolve_seed(a.seed);
  const auto cluster = resolve_cluster(a, "exp1");
  const auto models = resolve_models(a.model, cluster, seed);
  const auto grid = parse_grid(grid_text);
  const auto rows = sweep_uniform(cluster, models, grid);
  auto config = base_config("sweep", a, cluster, Hyperparams{});
  config["grid"] = grid_text;
  const auto stamp = make_stamp(config, seed);
  const auto out = prepare_out(a.out);
  write_text(out / "sweep.csv", sweep_csv(rows, stamp));
  std::cout << rows.size() << " rows written to " << (out / "sweep.csv").string() << '\n';
  return kExitOk;
}

int cmd_batch(const CommonArgs& a, std::size_t n, std::size_t threads) {
  const auto seed = resolve_seed(a.seed);
  const auto hyper = resolve_hyper(a, seed);
  RandomInstanceSpec spec;
  spec.seed = seed;
  if (a.model != "synthetic") throw error(errc::invalid_argument, "batch supports only --model synthetic");
  const auto summary = robustness_batch(spec, n, hyper, threads);
  const json config{{"command", "batch"}, {"n", n}, {"hyper", hyper}, {"model", a.model}};
  const auto stamp = make_stamp(config, seed);
  const auto out = prepare_out(a.out);
  write_text(out / "batch.csv", batch_csv(summary, stamp));
  write_text(out / "batch_summary.json", batch_summary_json(summary, stamp).dump(2) + "\n");
  std::cout << "solved " << summary.solved << "/" << summary.n << " (rate " << format_number(summary.solved_rate())
            << ", 95% CI [" << format_number(summary.solved_ci.low) << ", " << format_number(summary.solved_ci.high)
            << "])\n";
  for (const auto& [path, count] : summary.paths) std::cout << "  " << path << ": " << count << '\n';
  return kExitOk;
}

int cmd_importance(const CommonArgs& a, std::size_t n, std::size_t probes) {
  const auto seed = resolve_seed(a.seed);
  const auto cluster = resolve_cluster(a, "exp1");
  std::vector<double> scores;
  constexpr std::string_view prefix = "surrogate:";
  if (a.model.rfind(prefix, 0) == 0) {
    const auto models = resolve_models(a.model, cluster, seed);
    scores = view_importance(*models.accuracy, cluster.views(), probes, split_seed(seed, 14));
  } else {
    const auto truth = resolve_models(a.model, cluster, seed);
    BoostingOptions opt;
    opt.seed = split_seed(seed, 13);
    const auto fitted = fit_surrogate(training_data(*truth.accuracy, cluster.views(), n, seed), opt);
    scores = view_importance(fitted, cluster.views(), probes, split_seed(seed, 14));
  }
  auto config = base_config("importance", a, cluster, Hyperparams{});
  config["n"] = n;
  config["probes"] = probes;
  const auto stamp = make_stamp(config, seed);
  const auto out = prepare_out(a.out);
  write_text(out / "importance.csv", vector_csv("importance", scores, stamp));
  for (std::size_t v = 0; v < scores.size(); ++v) std::cout << v << ' ' << format_number(scores[v]) << '\n';
  return kExitOk;
}

int cmd_dataset(const CommonArgs& a, std::size_t n, const std::string& stem) {
  const auto seed = resolve_seed(a.seed);
  const auto cluster = resolve_cluster(a, "exp1");
  const auto models = resolve_models(a.model, cluster, seed);
  const auto data = training_data(*models.accuracy, cluster.views(), n, seed);
  const auto out = prepare_out(a.out);
  save_dataset(data, out / stem, seed);
  std::cout << data.size() << " samples written to " << (out / stem).string() << ".{json,csv}\n";
  return kExitOk;
}

int cmd_presets(bool as_json) {
  if (as_json) {
    json all = json::object();
    for (const auto& t : kPresetTables) all[std::string(t.id)] = preset_cluster(t.id);
    std::cout << all.dump(2) << '\n';
    return kExitOk;
  }
  const auto importance = view_importance_profile();
  for (const auto& t : kPresetTables) {
    std::cout << t.id << "  " << t.title << "  min_accuracy " << format_number(t.min_accuracy) << '\n';
    std::cout << "  perf:";
    for (double f : t.perf) std::cout << ' ' << format_number(f);
    std::cout << "\n  mem_mb:";
    for (double m : t.mem_mb) std::cout << ' ' << format_number(m);
    std::cout << '\n';
  }
  std::cout << "importance (percent):";
  for (double p : kViewImportancePercent) std::cout << ' ' << format_number(p);
  std::cout << "\nbackbone " << format_number(kBackboneSizeMb) << " MB, accuracy " << format_number(kBackboneAccuracy)
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-view pruning optimizer for multi-view inference on heterogeneous edge devices"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonArgs args;
  std::string grid_text;
  bool timing = false;
  bool archive = false;
  bool as_json = false;
  std::size_t n = 0;
  std::size_t threads = 1;
  std::size_t probes = kDefaultProbes;
  std::string stem = "dataset";

  auto* optimize_cmd = app.add_subcommand("optimize", "run the full optimization pipeline on one cluster");
  add_cluster_flags(optimize_cmd, args);
  add_run_flags(optimize_cmd, args);
  add_model_flag(optimize_cmd, args);
  optimize_cmd->add_option("--grid", grid_text, "restrict the search to a discrete grid lo:hi:step");
  optimize_cmd->add_flag("--timing", timing, "record wall time in report.json");
  optimize_cmd->add_flag("--archive", archive, "return the elitist archive instead of the final rank-0 set");

  auto* sweep_cmd = app.add_subcommand("sweep", "uniform pruning sweep (accuracy, size, normalized latency)");
  add_cluster_flags(sweep_cmd, args);
  add_run_flags(sweep_cmd, args);
  add_model_flag(sweep_cmd, args);
  sweep_cmd->add_option("--grid", grid_text, "levels lo:hi:step")->default_val("0:0.98:0.02");

  auto* batch_cmd = app.add_subcommand("batch", "robustness batch over random instances");
  add_run_flags(batch_cmd, args);
  add_model_flag(batch_cmd, args);
  batch_cmd->add_option("--n", n, "number of instances")->default_val(100);
  batch_cmd->add_option("--threads", threads, "worker threads")->default_val(1);

  auto* importance_cmd = app.add_subcommand("importance", "fit a surrogate and report per-view importance");
  add_cluster_flags(importance_cmd, args);
  add_run_flags(importance_cmd, args);
  add_model_flag(importance_cmd, args);
  importance_cmd->add_option("--n", n, "training samples drawn from the model")->default_val(kDefaultDatasetSize);
  importance_cmd->add_option("--probes", probes, "permutation probes")->default_val(kDefaultProbes);

  auto* dataset_cmd = app.add_subcommand("dataset", "sample (pruning vector, accuracy) pairs from a model");
  add_cluster_flags(dataset_cmd, args);
  add_run_flags(dataset_cmd, args);
  add_model_flag(dataset_cmd, args);
  dataset_cmd->add_option("--n", n, "number of samples")->default_val(kDefaultDatasetSize);
  dataset_cmd->add_option("--stem", stem, "file stem inside --out")->capture_default_str();

  auto* presets_cmd = app.add_subcommand("presets", "list the embedded experiment tables");
  presets_cmd->add_flag("--json", as_json, "print the presets as cluster JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (*optimize_cmd) return cmd_optimize(args, grid_text, timing, archive);
    if (*sweep_cmd) return cmd_sweep(args, grid_text);
    if (*batch_cmd) return cmd_batch(args, n, threads);
    if (*importance_cmd) return cmd_importance(args, n, probes);
    if (*dataset_cmd) return cmd_dataset(args, n, stem);
    if (*presets_cmd) return cmd_presets(as_json);
  } catch (const std::exception& e) {
    std::cerr << "slimedge: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
