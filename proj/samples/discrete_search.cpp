// A three-view cluster searched over a five-level grid, with accuracy read
// from a lookup table instead of the analytic model.

#include <iostream>
#include <memory>

#include "slimedge/slimedge.hpp"

int main() {
  using namespace slimedge;

  ClusterSpec cluster;
  cluster.base_model_size_mb = 400.0;
  cluster.base_accuracy = 0.9;
  cluster.min_accuracy = 0.7;
  cluster.importance = {0.5, 0.3, 0.2};
  cluster.devices = {{ViewId{0}, 0.9, 350.0, std::nullopt},
                     {ViewId{1}, 0.3, 250.0, std::nullopt},
                     {ViewId{2}, 0.1, 300.0, std::nullopt}};

  const auto grid = PruningGrid::linspace(0.0, 0.98, 5);
  auto table = std::make_shared<TabularAccuracy>(TabularAccuracy::random(grid, 3, 0.6, 0.9, 42));
  const Instance inst(cluster, ModelSet{table, LatencyModel{}}, Hyperparams{});

  const auto alloc = allocate(cluster, inst.hyper);
  const auto init = sample_population(cluster, alloc, 16, inst.hyper.omega, 1);
  SearchOptions opts;
  opts.grid = grid;
  const auto result = nsga2_run(inst, init, 2, opts);

  std::cout << "f1,f2,f3,feasible,p\n";
  for (const auto& c : result.front.members) {
    std::cout << c.objectives.f1 << ',' << c.objectives.f2 << ',' << c.objectives.f3 << ',' << c.feasible() << ",(";
    for (std::size_t v = 0; v < c.p.size(); ++v) std::cout << (v ? " " : "") << c.p[v];
    std::cout << ")\n";
  }
  if (const auto pick = select_deployment(result.front)) {
    std::cout << "deploy:";
    for (double p : pick->p.values()) std::cout << ' ' << p;
    std::cout << '\n';
  }
}
