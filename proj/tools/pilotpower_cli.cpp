// pilotpower command-line harness: run, sweep, cluster, bounds and genie.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pilotpower/bounds.hpp"
#include "pilotpower/config.hpp"
#include "pilotpower/experiment.hpp"

namespace pp = pilotpower;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> scenario, algorithm, prior, output;
  std::optional<double> length_scale, gamma, sinr_threshold, power_threshold;
  std::optional<std::uint64_t> horizon, seed;
  std::optional<std::size_t> repetitions, clusters, genie_samples, prior_samples, fixed_arm;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "TOML experiment configuration")->check(CLI::ExistingFile);
    app->add_option("--scenario", scenario, "k1, k2, k4 or synthetic");
    app->add_option("--algorithm,--algo", algorithm, "uipa, bpa, cbpa, uipa-sc, bpa-sc, cbpa-sc, heuristic or fixed");
    app->add_option("--prior", prior, "good, poor or custom");
    app->add_option("--length-scale", length_scale, "prior correlation length-scale l (dB)");
    app->add_option("-T,--horizon", horizon, "horizon T (slots)");
    app->add_option("-R,--repetitions", repetitions, "number of seeded repetitions");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--gamma", gamma, "linear switching cost per dB");
    app->add_option("--clusters", clusters, "K-medoids cluster count N");
    app->add_option("--sinr-threshold", sinr_threshold, "SINR threshold (dB)");
    app->add_option("--power-threshold", power_threshold, "max power difference of adjacent SBSs (dB)");
    app->add_option("--genie-samples", genie_samples, "Monte-Carlo samples per arm for the genie");
    app->add_option("--prior-samples", prior_samples, "Monte-Carlo samples per arm for the prior oracle");
    app->add_option("--fixed-arm", fixed_arm, "arm index for the fixed baseline");
    app->add_option("-o,--output", output, "output CSV path (stdout when omitted)");
  }

  [[nodiscard]] pp::ExperimentConfig resolve() const {
    pp::ExperimentConfig cfg = config_path.empty() ? pp::ExperimentConfig{} : pp::load_config(config_path);
    if (scenario) cfg.scenario = pp::parse_scenario_kind(*scenario);
    if (algorithm) cfg.algorithm = pp::parse_algorithm(*algorithm);
    if (prior) cfg.prior = pp::parse_prior_quality(*prior);
    if (length_scale) cfg.length_scale_db = *length_scale;
    if (horizon) cfg.horizon = *horizon;
    if (repetitions) cfg.repetitions = *repetitions;
    if (seed) cfg.seed = *seed;
    if (gamma) cfg.gamma = *gamma;
    if (clusters) cfg.clusters = *clusters;
    if (sinr_threshold) cfg.sinr_threshold_db = *sinr_threshold;
    if (power_threshold) cfg.power_threshold_db = *power_threshold;
    if (genie_samples) cfg.genie_samples = *genie_samples;
    if (prior_samples) cfg.prior_samples = *prior_samples;
    if (fixed_arm) cfg.fixed_arm = *fixed_arm;
    if (output) cfg.output = *output;
    cfg.validate();
    return cfg;
  }
};

// Writes through `fn` to `path`, or to stdout when the path is empty.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path);
  if (!os) throw pp::ConfigError("cannot open output file '" + path + "'");
  fn(os);
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

void print_summary(const pp::ExperimentConfig& cfg, const pp::ExperimentResult& res) {
  const auto [regret, regret_se] = res.final_regret_mean_and_se();
  const auto [sw, sw_se] = res.switch_mean_and_se();
  std::fprintf(stderr, "%-10s prior=%-6s T=%llu R=%zu  regret %.4g +- %.3g  switches %.4g +- %.3g  [%s]\n",
               pp::to_string(cfg.algorithm).c_str(), pp::to_string(cfg.prior).c_str(),
               static_cast<unsigned long long>(cfg.horizon), cfg.repetitions, regret, regret_se, sw, sw_se,
               res.config_hash.c_str());
}

void cmd_run(const Overrides& o) {
  const auto cfg = o.resolve();
  const auto sc = pp::prepare_scenario(cfg);
  const auto res = pp::run_experiment(cfg, sc);
  emit(cfg.output, [&](std::ostream& os) { pp::write_regret_csv(os, res); });
  if (!cfg.output.empty()) {
    emit(sibling_path(cfg.output, "_runs"), [&](std::ostream& os) { pp::write_runs_csv(os, res, sc); });
  }
  print_summary(cfg, res);
}

void cmd_sweep(const Overrides& o, const std::vector<std::string>& algorithms, const std::vector<std::string>& priors,
               const std::string& out_dir) {
  const auto base = o.resolve();
  const auto sc = pp::prepare_scenario(base);
  std::cout << "algorithm,prior,mean_final_regret,se_final_regret,mean_switches,se_switches,config_hash,seed\n";
  for (const auto& a : algorithms) {
    for (const auto& p : priors) {
      auto cfg = base;
      cfg.algorithm = pp::parse_algorithm(a);
      cfg.prior = pp::parse_prior_quality(p);
      cfg.validate();
      const auto res = pp::run_experiment(cfg, sc);
      if (!out_dir.empty()) {
        const std::string stem = out_dir + "/" + a + "_" + p;
        emit(stem + ".csv", [&](std::ostream& os) { pp::write_regret_csv(os, res); });
        emit(stem + "_runs.csv", [&](std::ostream& os) { pp::write_runs_csv(os, res, sc); });
      }
      const auto [r, rse] = res.final_regret_mean_and_se();
      const auto [s, sse] = res.switch_mean_and_se();
      std::cout << a << ',' << p << ',' << pp::format_g9(r) << ',' << pp::format_g9(rse) << ',' << pp::format_g9(s)
                << ',' << pp::format_g9(sse) << ',' << res.config_hash << ',' << res.seed << '\n';
      // Policies without a prior ignore the prior axis.
      if (cfg.algorithm == pp::Algorithm::uipa || cfg.algorithm == pp::Algorithm::uipa_sc ||
          cfg.algorithm == pp::Algorithm::heuristic || cfg.algorithm == pp::Algorithm::fixed) {
        break;
      }
    }
  }
}

void cmd_cluster(const Overrides& o) {
  auto cfg = o.resolve();
  if (!cfg.clusters) throw pp::ConfigError("cluster: --clusters N is required");
  const auto sc = pp::prepare_scenario(cfg);
  pp::KMedoidsResult km;
  pp::select_played_arms(cfg, sc, &km);
  emit(cfg.output, [&](std::ostream& os) { pp::write_cluster_csv(os, sc, km, pp::config_hash(cfg), cfg.seed); });
  std::fprintf(stderr, "k-medoids: %zu arms -> %zu medoids, cost %.6g after %zu iterations\n", sc.arm_count(),
               km.medoids.size(), km.cost, km.iterations);
}

void cmd_bounds(const Overrides& o, std::uint64_t step) {
  const auto cfg = o.resolve();
  const auto sc = pp::prepare_scenario(cfg);
  const auto played = pp::select_played_arms(cfg, sc);
  const auto prior = pp::build_prior(sc, played, cfg.prior, cfg.length_scale_db, cfg.custom_prior_mean,
                                     cfg.custom_prior_std);
  pp::BoundInputs in;
  for (const std::size_t a : played) in.true_means.push_back(sc.truth[a].mean);
  in.prior_mean = prior.mean();
  in.prior_covariance = prior.covariance();
  in.base_std = prior.base_std();
  const auto cost = pp::SwitchingCostFn::linear(cfg.gamma);
  in.switch_max = pp::switch_maxima(played.size(), [&](std::size_t i, std::size_t j) {
    return pp::switching_cost(sc.space.powers(played[i]), sc.space.powers(played[j]), cost);
  });
  std::vector<double> error;
  for (std::size_t i = 0; i < played.size(); ++i) error.push_back(in.true_means[i] - in.prior_mean(static_cast<Eigen::Index>(i)));
  const std::string hash = pp::config_hash(cfg);
  emit(cfg.output, [&](std::ostream& os) {
    os << "slot,uipa_bound,bpa_bound,cbpa_bound,cbpa_sc_bound,accurate_prior_bound,config_hash,seed\n";
    for (std::uint64_t t = 2; t <= cfg.horizon; t += step) {
      const double T = static_cast<double>(t);
      os << t << ',' << pp::format_g9(pp::uipa_bound(T, in.true_means, in.base_std)) << ','
         << pp::format_g9(pp::bpa_bound(T, in.true_means, in.base_std, error)) << ','
         << pp::format_g9(pp::cbpa_bound(T, in)) << ',' << pp::format_g9(pp::cbpa_sc_bound(T, in)) << ','
         << pp::format_g9(pp::accurate_prior_bound(T, in.true_means, in.base_std)) << ',' << hash << ',' << cfg.seed
         << '\n';
    }
  });
}

void cmd_genie(const Overrides& o) {
  const auto cfg = o.resolve();
  const auto sc = pp::prepare_scenario(cfg);
  emit(cfg.output, [&](std::ostream& os) { pp::write_genie_csv(os, sc, pp::config_hash(cfg), cfg.seed); });
  const std::size_t best = sc.best_arm();
  std::fprintf(stderr, "genie optimum: arm %zu, mean PIF %.6g\n", best, sc.truth[best].mean);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pilot power self-optimization bandit harness"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, cluster_o, bounds_o, genie_o;
  auto* run = app.add_subcommand("run", "run one experiment and write the regret curve");
  run_o.attach(run);

  auto* sweep = app.add_subcommand("sweep", "run an algorithm x prior grid on one scenario");
  sweep_o.attach(sweep);
  std::vector<std::string> algorithms{"uipa", "bpa", "cbpa"};
  std::vector<std::string> priors{"good", "poor"};
  std::string out_dir;
  sweep->add_option("--algorithms", algorithms, "algorithms to sweep")->delimiter(',');
  sweep->add_option("--priors", priors, "prior qualities to sweep")->delimiter(',');
  sweep->add_option("--out-dir", out_dir, "directory for per-combination CSVs");

  auto* cluster = app.add_subcommand("cluster", "emit the K-medoids reduction of the arm space");
  cluster_o.attach(cluster);

  auto* bounds = app.add_subcommand("bounds", "emit regret bound curves");
  bounds_o.attach(bounds);
  std::uint64_t step = 1;
  bounds->add_option("--step", step, "slot spacing of the bound curve")->check(CLI::PositiveNumber);

  auto* genie = app.add_subcommand("genie", "emit the per-arm Monte-Carlo PIF table");
  genie_o.attach(genie);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) cmd_run(run_o);
    if (*sweep) cmd_sweep(sweep_o, algorithms, priors, out_dir);
    if (*cluster) cmd_cluster(cluster_o);
    if (*bounds) cmd_bounds(bounds_o, step);
    if (*genie) cmd_genie(genie_o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
