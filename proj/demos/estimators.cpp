// Runs the four estimator variants on one generated scenario and prints how
// many instants each needs to bring every node within delta of the
// reference set.

#include <cstdio>

#include "setmember/setmember.hpp"

int main() {
  using namespace setmember;
  const std::size_t n = 5;
  const std::size_t node_count = 7;
  const Scenario sc = generate_scenario(n, node_count, /*seed=*/42);
  const ScenarioSource source(sc);
  const StoppingRule stop = reference_stop(sc, ReferenceKind::Asymptotic, 1e-3);

  for (const Variant& v : {Variant::incremental_nstep(), Variant::incremental_1step(),
                           Variant::distributed_complete(), Variant::distributed_ring()}) {
    Estimator est = make_estimator(v, sc);
    const Trajectory t = run_until(est, source, stop, kDefaultMaxSteps);
    std::printf("%-22s %s after %6ld instants, disagreement %.3g\n", v.label.c_str(),
                t.stopped ? "stopped" : "no stop", t.steps, t.final_disagreement);
  }

  // The estimate of node 0 under the N-step estimator, against the truth.
  Estimator est = make_estimator(Variant::incremental_nstep(), sc);
  const Trajectory t = run_until(est, source, stop, kDefaultMaxSteps);
  std::printf("\ntheta*   ");
  for (double v : sc.theta_star) std::printf(" % .4f", v);
  std::printf("\nestimate ");
  for (double v : t.final_estimates.front()) std::printf(" % .4f", v);
  std::printf("\n");
  return 0;
}
