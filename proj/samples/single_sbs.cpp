// Runs CBPA once on the single-SBS enterprise and prints how the chosen
// pilot power evolves, next to the genie optimum.

#include <cstdio>
#include <vector>

#include "pilotpower/pilotpower.hpp"

namespace pp = pilotpower;

int main() {
  pp::ExperimentConfig cfg;
  cfg.scenario = pp::ScenarioKind::k1;
  cfg.algorithm = pp::Algorithm::cbpa;
  cfg.repetitions = 1;
  cfg.genie_samples = 2000;
  cfg.prior_samples = 200;

  const pp::Scenario sc = pp::prepare_scenario(cfg);
  const std::size_t best = sc.best_arm();
  std::printf("genie optimum: %g dBm (mean PIF %.3f)\n", sc.space.arms[best][0], sc.truth[best].mean);

  std::vector<std::size_t> arms(sc.arm_count());
  for (std::size_t i = 0; i < arms.size(); ++i) arms[i] = i;
  const auto prior = pp::build_prior(sc, arms, cfg.prior, cfg.length_scale_db);
  const auto env = sc.environment(arms);

  pp::CbpaPolicy policy(prior);
  pp::RngStream rng(cfg.seed, "sample");
  const pp::RunTrace trace = pp::run_per_slot(policy, env, cfg.horizon, pp::SwitchingCostFn::linear(0.0), rng);

  for (std::size_t t = 0; t < trace.horizon(); t += 250) {
    std::printf("slot %5zu  power %6.1f dBm  PIF %6.2f\n", t + 1, sc.space.arms[trace.arms[t]][0], trace.rewards[t]);
  }
  const std::size_t modal = trace.modal_arm(300, arms.size());
  std::printf("most played over the last 300 slots: %g dBm, %zu switches in total\n", sc.space.arms[modal][0],
              trace.switch_count());
  return 0;
}
