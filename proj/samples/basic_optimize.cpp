// Optimize one embedded preset and compare it with the unpruned deployment.

#include <iostream>
#include <string>

#include "slimedge/slimedge.hpp"

int main(int argc, char** argv) {
  const std::string id = argc > 1 ? argv[1] : "exp1";
  const auto cluster = slimedge::preset_cluster(id);
  const auto models = slimedge::default_models(cluster);
  slimedge::Hyperparams hyper;
  hyper.seed = 7;

  const auto report = slimedge::optimize(cluster, models, hyper);
  const auto unpruned = slimedge::uniform_baseline(cluster, models, 0.0, hyper);

  std::cout << slimedge::report_table(report, cluster);
  std::cout << "front size " << report.front.size() << ", unpruned speedup " << unpruned.speedup << '\n';
  return report.feasible() ? 0 : 2;
}
