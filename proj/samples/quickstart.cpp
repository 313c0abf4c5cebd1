// Simulates a short drive on a 5x5 grid and reconstructs it with every method.
#include <cstdio>

#include "rssmm/rssmm.hpp"

int main() {
  using namespace rssmm;
  ScenarioConfig sc_cfg;
  sc_cfg.slots = 300;
  sc_cfg.seed = 11;
  const Scenario sc = make_scenario(sc_cfg);

  SolverConfig cfg;
  const GraphPair graphs = build_graph_pair(sc.network, cfg, sc.seq.delta);
  const HreResult hre = run_hre(sc.seq, sc.stations, graphs, cfg);
  const HreResult hrea = run_hrea(sc.seq, sc.stations, graphs, cfg);

  std::printf("%-5s %8s %8s\n", "method", "QLE[m]", "TME[%]");
  auto row = [&](const char* name, const Trajectory& est) {
    const EvaluationReport r = evaluate(est, sc.truth, graphs.fine);
    std::printf("%-5s %8.2f %8.2f\n", name, r.qle, r.tme);
  };
  row("MaR", baseline_mar(sc.seq, sc.stations));
  row("WCL", baseline_wcl(sc.seq, sc.stations));
  row("MSR", hre.initial.trajectory);
  row("HRE", hre.trajectory);
  row("HREA", hrea.trajectory);
  std::printf("HRE outer iterations: %zu\n", hre.diagnostics.size());
  return 0;
}
