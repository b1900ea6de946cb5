// Acceptance runner: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. `--only N` runs a single criterion,
// `--threads T` parallelizes the robustness batch (criterion 5).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "properties.hpp"
#include "slimedge/io.hpp"

using namespace slimedge;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

bool same_objectives(const Candidate& a, const Candidate& b) {
  const auto fa = a.objectives.as_array();
  const auto fb = b.objectives.as_array();
  for (std::size_t m = 0; m < fa.size(); ++m) {
    if (std::abs(fa[m] - fb[m]) > 1e-9) return false;
  }
  return true;
}

bool contains(const std::vector<Candidate>& set, const Candidate& c) {
  return std::any_of(set.begin(), set.end(), [&](const Candidate& x) { return same_objectives(x, c); });
}

// 1: NSGA-II feasible front equals the exhaustive Pareto set on 3-view, 5-level grids.
Verdict oracle_equivalence() {
  const Stopwatch clock;
  const auto grid = PruningGrid::linspace(0.0, 0.98, 5);
  std::size_t matches = 0;
  std::size_t nonempty = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(split_seed(77, k));
    std::uniform_real_distribution<double> cap(150.0, 600.0), perf(0.05, 1.0), floor(0.55, 0.8);
    ClusterSpec c;
    c.base_model_size_mb = 506.8;
    c.base_accuracy = 0.9;
    c.min_accuracy = floor(rng);
    for (std::size_t v = 0; v < 3; ++v) c.devices.push_back({ViewId{v}, perf(rng), cap(rng), std::nullopt});
    c.importance = {1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0};
    auto table = std::make_shared<TabularAccuracy>(TabularAccuracy::random(grid, 3, 0.5, 0.9, split_seed(78, k)));
    Hyperparams h;
    h.seed = k + 1;
    const Instance inst(c, ModelSet{table, {}}, h);

    std::vector<Candidate> all;
    for (double a : grid.levels()) {
      for (double b : grid.levels()) {
        for (double d : grid.levels()) all.push_back(evaluate_candidate(PruningVector{a, b, d}, inst));
      }
    }
    std::vector<Candidate> brute;
    for (const auto& x : all) {
      if (!x.feasible()) continue;
      const bool dominated =
          std::any_of(all.begin(), all.end(), [&](const Candidate& y) { return y.feasible() && dominates(y, x); });
      if (!dominated && !contains(brute, x)) brute.push_back(x);
    }

    const auto init = sample_population(c, allocate(c, h), h.pop_size, h.omega, 5 + k);
    SearchOptions opts;
    opts.grid = grid;
    const auto res = nsga2_run(inst, init, 9 + k, opts);
    std::vector<Candidate> got;
    for (const auto& m : res.front.members) {
      if (m.feasible()) got.push_back(m);
    }
    const bool equal = std::all_of(brute.begin(), brute.end(), [&](const auto& x) { return contains(got, x); }) &&
                       std::all_of(got.begin(), got.end(), [&](const auto& x) { return contains(brute, x); });
    matches += equal ? 1 : 0;
    nonempty += brute.empty() ? 0 : 1;
  }
  const double t = clock.seconds();
  return {matches == 20 && t < 30.0, std::to_string(matches) + "/20 fronts equal (" + std::to_string(nonempty) +
                                          " with feasible points), " + fmt(t, 2) + " s"};
}

// 2: GA penalty reaches the exhaustive minimum on infeasible 2-view grid instances.
Verdict fallback_optimality() {
  const Stopwatch clock;
  const auto grid = PruningGrid::linspace(0.0, 0.98, 5);
  std::size_t ok = 0;
  double worst_gap = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Rng rng(split_seed(91, k));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ClusterSpec c;
    c.base_model_size_mb = 506.8;
    c.base_accuracy = 0.9;
    c.min_accuracy = 0.86 + 0.04 * u(rng);  // above every table entry
    c.importance = {0.5, 0.5};
    for (std::size_t v = 0; v < 2; ++v) {
      // First half: caps above the backbone, so all 25 vectors are in the box.
      const double cap = k < 10 ? 600.0 : 506.8 * (0.3 + 0.7 * u(rng));
      c.devices.push_back({ViewId{v}, 0.05 + u(rng), cap, std::nullopt});
    }
    auto table = std::make_shared<TabularAccuracy>(TabularAccuracy::random(grid, 2, 0.5, 0.85, split_seed(92, k)));
    Hyperparams h;
    h.seed = k + 1;
    const Instance inst(c, ModelSet{table, {}}, h);
    const auto p_min = min_pruning(c);

    double best = std::numeric_limits<double>::infinity();
    for (double a : grid.levels()) {
      for (double b : grid.levels()) {
        if (a < p_min[0] || b < p_min[1]) continue;  // outside [p_min, 0.99]
        best = std::min(best, penalty(PruningVector{a, b}, inst).total);
      }
    }
    const auto init = sample_population(c, allocate(c, h), h.pop_size, h.omega, split_seed(93, k));
    SearchOptions opts;
    opts.grid = grid;
    const double got = ga_run(inst, init, split_seed(94, k), opts).best_penalty.total;
    ok += got <= best + 1e-9 ? 1 : 0;
    worst_gap = std::max(worst_gap, got - best);
  }
  const double t = clock.seconds();
  return {ok == 20 && t < 10.0,
          std::to_string(ok) + "/20 at the exhaustive minimum, worst gap " + fmt(worst_gap, 9) + ", " + fmt(t, 2) + " s"};
}

// 3: closed-form values.
Verdict formulas() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  check(score_accuracy(0.0, 0.05, 0.05) == 1.0, "R_A(0)");
  check(score_size(250.0, 250.0, 50.0) == 100.0, "R_S(cap)");
  check(score_size(100.0, 400.0, 50.0) == 104.0, "R_S(100,400)");
  check(score_time(0.0, 1.0) == 100.0, "R_I(0)");
  const std::vector<double> caps = {100.0, 200.0};
  check(score_feasibility(0.8, 0.8, caps, caps) == 0.0, "R_B boundary");

  auto c = testing_support::small_cluster(2);
  const Instance inst(c, testing_support::constant_models(0.7), {});
  check(penalty(PruningVector{0.5, 0.5}, inst).total == 0.0, "penalty(feasible)");
  check(std::abs(min_pruning_for(253.93, 506.8) - 0.4990) <= 1e-4, "min_pruning");

  const std::vector<double> times = {1, 2, 4};
  const auto d = dperf_from_times(times);
  check(std::abs(d[0] - 0.5714) <= 1e-4 && std::abs(d[1] - 0.2857) <= 1e-4 && std::abs(d[2] - 0.1429) <= 1e-4,
        "dperf_from_times");
  const auto s = schedule(0.6, 0.0, 2);
  check(s.size() == 3 && std::all_of(s.begin(), s.end(), [](double x) { return std::abs(x - 0.2) <= 1e-12; }),
        "schedule");
  std::string detail = "9 values checked";
  for (const auto& f : failed) detail += ", wrong: " + f;
  return {failed.empty(), detail};
}

// 4: preset properties (a)-(e).
Verdict presets() {
  bool pass = true;
  std::string detail;
  for (const auto& t : kPresetTables) {
    const Stopwatch clock;
    const auto r = run_preset(t.id);
    const double secs = clock.seconds();
    const bool a = r.path != SolutionPath::min_pruning_fallback;
    const bool b = r.violations == 0;
    const bool cc = r.path != SolutionPath::nsga2 || r.accuracy >= t.min_accuracy;
    const bool dd = r.speedup > 1.5;
    const bool fast = secs < 60.0;
    pass = pass && a && b && cc && dd && fast;
    detail += std::string(t.id) + "[" + std::string(to_string(r.path)) + " speedup " + fmt(r.speedup, 2) + " acc " +
              fmt(r.accuracy, 4) + " viol " + std::to_string(r.violations) + " " + fmt(secs, 1) + "s" +
              (a && b && cc && dd && fast ? "" : " FAIL") + "] ";
    if (t.id == "exp1") {
      // Stable order keeps view order among equal perf factors.
      std::vector<std::size_t> order(12);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return t.perf[x] < t.perf[y]; });
      const double slow = (r.chosen[order[0]] + r.chosen[order[1]] + r.chosen[order[2]]) / 3.0;
      const double quick = (r.chosen[order[9]] + r.chosen[order[10]] + r.chosen[order[11]]) / 3.0;
      const bool e = slow - quick >= 0.10;
      pass = pass && e;
      detail += "(e) slow-minus-fast mean pruning " + fmt(slow - quick, 4) + (e ? " >= 0.10; " : " < 0.10 FAIL; ");
    }
  }
  return {pass, detail};
}

// 5: robustness batch.
Verdict robustness(std::size_t threads) {
  const Stopwatch clock;
  RandomInstanceSpec spec;
  const auto s = robustness_batch(spec, 1000, {}, threads);
  const double secs = clock.seconds();
  std::string paths;
  for (const auto& [p, n] : s.paths) paths += " " + p + "=" + std::to_string(n);
  const bool in_time = threads > 1 || secs < 1800.0;
  return {s.solved_rate() >= 0.90 && in_time,
          "solved " + std::to_string(s.solved) + "/1000, 95% CI [" + fmt(s.solved_ci.low, 4) + ", " +
              fmt(s.solved_ci.high, 4) + "], paths" + paths + ", " + fmt(secs, 1) + " s on " + std::to_string(threads) +
              " thread(s)"};
}

// 6: sweep shape.
Verdict sweep_shape() {
  const auto c = preset_cluster("exp1");
  const auto rows = sweep_uniform(c, default_models(c), PruningGrid::ablation());
  double size_dev = 0.0;
  double lo = 1e300, hi = -1e300;
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    size_dev = std::max(size_dev, std::abs(rows[i].size_mb - c.base_model_size_mb * (1.0 - rows[i].level)));
    lo = std::min(lo, rows[i].latency_norm);
    hi = std::max(hi, rows[i].latency_norm);
    if (i > 0 && rows[i].accuracy > rows[i - 1].accuracy) monotone = false;
  }
  const bool pass = size_dev == 0.0 && lo == 0.0 && hi == 1.0 && monotone;
  return {pass, std::to_string(rows.size()) + " rows, size deviation " + fmt(size_dev, 12) + ", latency span [" +
                    fmt(lo, 3) + ", " + fmt(hi, 3) + "], accuracy " + (monotone ? "nonincreasing" : "rises")};
}

// 7: sampler skew.
Verdict sampler_stats() {
  ClusterSpec c;
  c.base_model_size_mb = 100.0;
  c.base_accuracy = 0.9;
  c.min_accuracy = 0.5;
  c.importance = {0.1, 0.9};
  c.devices = {{ViewId{0}, 0.5, 200.0, std::nullopt}, {ViewId{1}, 0.5, 200.0, std::nullopt}};
  const auto alloc = allocate(c, 0.25);
  bool pass = alloc.p_min == PruningVector::zeros(2);
  double min_gap = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto pop = sample_population(c, alloc, 10000, 4.0, seed);
    double ma = 0.0, mb = 0.0;
    for (const auto& row : pop.rows) {
      for (double x : row.values()) pass = pass && x >= 0.0 && x <= kMaxPruning;
      ma += row[0];
      mb += row[1];
    }
    const double gap = (ma - mb) / static_cast<double>(pop.size());
    min_gap = std::min(min_gap, gap);
  }
  pass = pass && min_gap > 0.2;
  return {pass, "smallest mean(a) - mean(b) over 5 seeds " + fmt(min_gap, 4) + ", all entries in bounds"};
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);  // mean rank of the tie
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// 8: surrogate fidelity and recovered salience ordering.
Verdict surrogate_fidelity() {
  const auto c = preset_cluster("exp1");
  const SyntheticAccuracy truth = SyntheticAccuracy::for_cluster(c);
  const auto grid = PruningGrid::ablation();
  const auto train = make_dataset(truth, sample_configs(grid, 12, 2000, 801));
  const auto held_out = make_dataset(truth, sample_configs(grid, 12, 1000, 802));
  const auto model = fit_surrogate(train);
  const double err = rmse(model, held_out);
  const auto recovered = view_importance(model, 12, 2000, 803);
  const std::vector<double> injected(kViewImportancePercent.begin(), kViewImportancePercent.end());
  const double rho = spearman(recovered, injected);
  return {err < 0.01 && rho > 0.9, "held-out RMSE " + fmt(err, 5) + ", Spearman rho " + fmt(rho, 3)};
}

struct Run {
  int status = -1;
  std::string output;
};

Run run_cli(const std::string& args) {
  const auto log = fs::temp_directory_path() / "slimedge_acceptance_cli.log";
  const std::string cmd = std::string("\"") + SLIMEDGE_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  r.output.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 9: every CLI command repeated with the same seed writes identical files.
Verdict determinism() {
  const auto root = fs::temp_directory_path() / "slimedge_acceptance_cli";
  fs::remove_all(root);
  struct Case {
    std::string name;
    std::string args;
    int expected_status;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases = {
      {"optimize", "optimize --preset exp1 --seed 7", 0, {"report.json", "front.csv", "generations.csv"}},
      {"optimize-grid", "optimize --preset exp3 --seed 2 --grid 0:0.98:0.07 --hyper n_generations=40", 0,
       {"report.json", "front.csv", "generations.csv"}},
      {"sweep", "sweep --grid 0:0.98:0.02", 0, {"sweep.csv"}},
      {"batch", "batch --n 100 --seed 3", 0, {"batch.csv", "batch_summary.json"}},
      {"importance", "importance --preset exp1 --n 400 --probes 200 --seed 4", 0, {"importance.csv"}},
      {"dataset", "dataset --preset exp2 --n 120 --seed 5", 0, {"dataset.json", "dataset.csv"}},
      {"feature-bank", "optimize --preset exp2 --model feature-bank --seed 6 --hyper n_generations=10", -2,
       {"report.json", "front.csv", "generations.csv"}},
  };
  std::vector<std::string> problems;
  for (const auto& c : cases) {
    std::vector<std::string> runs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = root / (c.name + "_" + std::to_string(rep));
      const auto r = run_cli(c.args + " --out \"" + dir.string() + "\"");
      if (c.expected_status >= 0 && r.status != c.expected_status) {
        problems.push_back(c.name + " exit " + std::to_string(r.status));
      }
      if (c.expected_status == -2 && r.status != 0 && r.status != 2) problems.push_back(c.name + " exit " + std::to_string(r.status));
      for (const auto& f : c.files) {
        if (!fs::exists(dir / f)) problems.push_back(c.name + " missing " + f);
        runs[rep].push_back(slurp(dir / f));
      }
    }
    if (runs[0] != runs[1]) problems.push_back(c.name + " output differs between runs");
  }
  const auto sweep_lines = slurp(root / "sweep_0" / "sweep.csv");
  if (std::count(sweep_lines.begin(), sweep_lines.end(), '\n') != 52) problems.push_back("sweep row count");
  const auto batch_lines = slurp(root / "batch_0" / "batch.csv");
  if (std::count(batch_lines.begin(), batch_lines.end(), '\n') != 102) problems.push_back("batch row count");

  const auto missing = root / "does_not_exist.json";
  const auto r = run_cli("optimize --cluster \"" + missing.string() + "\" --out \"" + (root / "missing").string() + "\"");
  if (r.status != 1 || r.output.find(missing.string()) == std::string::npos) {
    problems.push_back("missing cluster: exit " + std::to_string(r.status));
  }

  std::string detail = std::to_string(cases.size()) + " commands run twice, byte-identical outputs";
  if (!problems.empty()) {
    detail = "problems:";
    for (const auto& p : problems) detail += " [" + p + "]";
  }
  return {problems.empty(), detail};
}

// 10: invariant suites, 10^3 cases each.
Verdict invariants() {
  const std::vector<std::pair<std::string, properties::Outcome>> suites = {
      {"dominance", properties::dominance_agreement(1000, 101)},
      {"p_final box", properties::allocation_bounds(1000, 102)},
      {"sum lambda", properties::weights_sum_to_one(1000, 103)},
      {"R_B gate", properties::feasibility_consistency(1000, 104, false)},
      {"penalty zero", properties::feasibility_consistency(1000, 105, true)},
      {"elitism", properties::elitism(1000, 106)},
  };
  bool pass = true;
  std::string detail;
  for (const auto& [name, o] : suites) {
    pass = pass && o.ok() && o.cases >= 1000;
    detail += name + " " + std::to_string(o.cases - o.failures) + "/" + std::to_string(o.cases);
    if (!o.ok()) detail += " (" + o.first_failure + ")";
    detail += "; ";
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  std::size_t threads = 1;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg == "--threads" && i + 1 < argc) {
      threads = static_cast<std::size_t>(std::max(1, std::atoi(argv[++i])));
    } else {
      std::cerr << "usage: acceptance [--only N] [--threads T]\n";
      return 64;
    }
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"fallback optimality", fallback_optimality},
      {"formula values", formulas},
      {"experiment presets", presets},
      {"robustness batch", [threads] { return robustness(threads); }},
      {"sweep shape", sweep_shape},
      {"sampler statistics", sampler_stats},
      {"surrogate fidelity", surrogate_fidelity},
      {"determinism", determinism},
      {"invariant suites", invariants},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only != 0 && only != id) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  return failures;
}
