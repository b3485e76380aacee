#pragma once

// Experiment orchestration: scenario preparation (genie truth and prior
// oracle), prior construction, seeded repetitions, regret aggregation and
// CSV emission.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pilotpower/arm_space.hpp"
#include "pilotpower/baselines.hpp"
#include "pilotpower/environment.hpp"
#include "pilotpower/errors.hpp"
#include "pilotpower/hetnet.hpp"
#include "pilotpower/policies.hpp"
#include "pilotpower/stats.hpp"
#include "pilotpower/switching.hpp"

namespace pilotpower {

enum class Algorithm { uipa, bpa, cbpa, uipa_sc, bpa_sc, cbpa_sc, heuristic, fixed };
enum class PriorQuality { good, poor, custom };
enum class ScenarioKind { k1, k2, k4, synthetic };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::uipa: return "uipa";
    case Algorithm::bpa: return "bpa";
    case Algorithm::cbpa: return "cbpa";
    case Algorithm::uipa_sc: return "uipa-sc";
    case Algorithm::bpa_sc: return "bpa-sc";
    case Algorithm::cbpa_sc: return "cbpa-sc";
    case Algorithm::heuristic: return "heuristic";
    case Algorithm::fixed: return "fixed";
  }
  return "cbpa";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (const Algorithm a : {Algorithm::uipa, Algorithm::bpa, Algorithm::cbpa, Algorithm::uipa_sc, Algorithm::bpa_sc,
                            Algorithm::cbpa_sc, Algorithm::heuristic, Algorithm::fixed}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + s +
                    "' (expected uipa, bpa, cbpa, uipa-sc, bpa-sc, cbpa-sc, heuristic or fixed)");
}

inline bool uses_blocks(Algorithm a) {
  return a == Algorithm::uipa_sc || a == Algorithm::bpa_sc || a == Algorithm::cbpa_sc;
}

inline std::string to_string(PriorQuality q) {
  switch (q) {
    case PriorQuality::good: return "good";
    case PriorQuality::poor: return "poor";
    case PriorQuality::custom: return "custom";
  }
  return "good";
}

inline PriorQuality parse_prior_quality(const std::string& s) {
  if (s == "good") return PriorQuality::good;
  if (s == "poor") return PriorQuality::poor;
  if (s == "custom") return PriorQuality::custom;
  throw ConfigError("unknown prior '" + s + "' (expected good, poor or custom)");
}

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::k1: return "k1";
    case ScenarioKind::k2: return "k2";
    case ScenarioKind::k4: return "k4";
    case ScenarioKind::synthetic: return "synthetic";
  }
  return "k1";
}

inline ScenarioKind parse_scenario_kind(const std::string& s) {
  if (s == "k1") return ScenarioKind::k1;
  if (s == "k2") return ScenarioKind::k2;
  if (s == "k4") return ScenarioKind::k4;
  if (s == "synthetic") return ScenarioKind::synthetic;
  throw ConfigError("unknown scenario '" + s + "' (expected k1, k2, k4 or synthetic)");
}

/// Mean PIF assigned to every arm by the poor prior.
inline constexpr double kPoorPriorMean = 50.0;

/// SINR threshold of the single-SBS experiment preset (dB). The multi-SBS
/// presets keep the deployment default of 0 dB.
inline constexpr double kSingleSbsExperimentSinrThresholdDb = 20.0;

struct SyntheticSpec {
  BankKind kind = BankKind::gaussian;
  std::vector<double> means;
  std::vector<double> stds;  // ignored (implied) for rayleigh
};

struct ExperimentConfig {
  ScenarioKind scenario = ScenarioKind::k1;
  Algorithm algorithm = Algorithm::cbpa;
  PriorQuality prior = PriorQuality::good;
  std::vector<double> custom_prior_mean;  // prior = custom
  double custom_prior_std = 0.0;          // <= 0: use the measured sigma0
  double length_scale_db = 40.0;          // l, exponential kernel
  std::uint64_t horizon = 3000;
  std::size_t repetitions = 50;
  std::uint64_t seed = 1;
  double gamma = 0.0;                     // linear switching cost, per dB
  std::optional<std::size_t> clusters;    // K-medoids arm reduction
  std::string output;

  std::optional<double> sinr_threshold_db;  // overrides the deployment value
  double power_threshold_db = 5.0;          // P_th between adjacent SBSs
  std::optional<Deployment> deployment;     // replaces the scenario preset
  SyntheticSpec synthetic;

  std::size_t genie_samples = 10000;
  std::size_t prior_samples = 1000;
  std::size_t fixed_arm = 0;
  std::uint64_t heuristic_dwell = 30;
  double heuristic_step_db = 2.0;
  std::size_t kmedoids_max_iter = 100;
  double convergence_hold = 0.95;
  double final_window_fraction = 0.1;

  void validate() const {
    if (horizon < 1) throw ConfigError("horizon T must be >= 1");
    if (repetitions < 1) throw ConfigError("repetitions R must be >= 1");
    if (!(length_scale_db >= 0.0)) throw ConfigError("length_scale must be >= 0 dB");
    if (!(gamma >= 0.0)) throw ConfigError("switching gamma must be >= 0");
    if (genie_samples < 2) throw ConfigError("genie_samples must be >= 2");
    if (prior == PriorQuality::good && prior_samples < 100) {
      throw ConfigError("a good prior needs prior_samples >= 100 (got " + std::to_string(prior_samples) + ")");
    }
    if (prior_samples < 2) throw ConfigError("prior_samples must be >= 2");
    if (clusters && *clusters < 1) throw ConfigError("cluster count N must be >= 1");
    if (!(power_threshold_db >= 0.0)) throw ConfigError("power_threshold must be >= 0 dB");
    if (!(convergence_hold > 0.0 && convergence_hold <= 1.0)) throw ConfigError("convergence_hold must lie in (0, 1]");
    if (!(final_window_fraction > 0.0 && final_window_fraction <= 1.0)) {
      throw ConfigError("final_window_fraction must lie in (0, 1]");
    }
    if (prior == PriorQuality::custom && custom_prior_mean.empty()) {
      throw ConfigError("prior = custom needs custom_prior_mean");
    }
    if (scenario == ScenarioKind::synthetic && synthetic.means.empty()) {
      throw ConfigError("scenario = synthetic needs synthetic.means");
    }
    if (heuristic_dwell < 1) throw ConfigError("heuristic dwell must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Scenario

/// Deployment of a preset scenario with the experiment SINR threshold.
inline Deployment scenario_deployment(const ExperimentConfig& cfg) {
  Deployment dep;
  if (cfg.deployment) {
    dep = *cfg.deployment;
  } else {
    switch (cfg.scenario) {
      case ScenarioKind::k1:
        dep = single_sbs_deployment();
        dep.sinr_threshold_db = kSingleSbsExperimentSinrThresholdDb;
        break;
      case ScenarioKind::k2: dep = two_sbs_deployment(); break;
      case ScenarioKind::k4: dep = four_sbs_deployment(); break;
      case ScenarioKind::synthetic: throw ConfigError("synthetic scenario has no deployment");
    }
  }
  if (cfg.sinr_threshold_db) dep.sinr_threshold_db = *cfg.sinr_threshold_db;
  dep.validate();
  return dep;
}

/// Reward source over an arm space: a hetnet simulator or a synthetic bank.
class ScenarioEnvironment {
 public:
  explicit ScenarioEnvironment(HetNetEnvironment env) : env_(std::move(env)) {}
  explicit ScenarioEnvironment(SyntheticBank bank) : env_(std::move(bank)) {}

  [[nodiscard]] std::size_t arm_count() const {
    return std::visit([](const auto& e) { return e.arm_count(); }, env_);
  }
  [[nodiscard]] double pull(std::size_t arm, RngStream& rng) const {
    return std::visit([&](const auto& e) { return e.pull(arm, rng); }, env_);
  }
  [[nodiscard]] std::span<const double> powers(std::size_t arm) const {
    return std::visit([&](const auto& e) { return e.powers(arm); }, env_);
  }

 private:
  std::variant<HetNetEnvironment, SyntheticBank> env_;
};

/// Everything about the world that is fixed across repetitions.
struct Scenario {
  ScenarioKind kind = ScenarioKind::k1;
  std::optional<Deployment> deployment;
  std::optional<SyntheticBank> bank;
  ArmSpace space;
  std::vector<GenieEstimate> truth;   // genie means per arm
  std::vector<GenieEstimate> oracle;  // self-configuration estimates per arm

  [[nodiscard]] std::size_t arm_count() const { return space.size(); }
  [[nodiscard]] std::vector<double> true_means() const {
    std::vector<double> m;
    for (const auto& g : truth) m.push_back(g.mean);
    return m;
  }
  [[nodiscard]] std::size_t best_arm() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < truth.size(); ++i) {
      if (truth[i].mean > truth[best].mean) best = i;
    }
    return best;
  }

  /// Environment restricted to the listed arms.
  [[nodiscard]] ScenarioEnvironment environment(std::span<const std::size_t> arms) const {
    if (bank) {
      std::vector<double> means, stds, labels;
      for (const std::size_t a : arms) {
        means.push_back(bank->means().at(a));
        stds.push_back(bank->stds().at(a));
        labels.push_back(bank->powers(a)[0]);
      }
      if (bank->kind() == BankKind::rayleigh) stds.clear();
      return ScenarioEnvironment(SyntheticBank(bank->kind(), std::move(means), std::move(stds), std::move(labels)));
    }
    return ScenarioEnvironment(HetNetEnvironment(*deployment, space.subset(arms)));
  }
};

namespace detail {

template <class PullFn>
GenieEstimate sample_moments(PullFn&& pull, std::size_t samples) {
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 1; s <= samples; ++s) {
    const double r = pull();
    const double delta = r - mean;
    mean += delta / static_cast<double>(s);
    m2 += delta * (r - mean);
  }
  GenieEstimate est;
  est.samples = samples;
  est.mean = mean;
  est.std = std::sqrt(std::max(0.0, m2 / static_cast<double>(samples - 1)));
  est.std_error = est.std / std::sqrt(static_cast<double>(samples));
  return est;
}

}  // namespace detail

/// Builds the arm space, the genie truth (genie_samples per arm on shared
/// shadowing draws) and the prior oracle (prior_samples per arm, independent
/// streams). Synthetic banks
/// have exact truth.
inline Scenario prepare_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.kind = cfg.scenario;
  const RngStream root(cfg.seed, "scenario");
  if (cfg.scenario == ScenarioKind::synthetic) {
    const auto& spec = cfg.synthetic;
    sc.bank = SyntheticBank(spec.kind, spec.means, spec.kind == BankKind::rayleigh ? std::vector<double>{} : spec.stds);
    sc.space.sbs_count = 1;
    for (std::size_t i = 0; i < sc.bank->arm_count(); ++i) {
      sc.space.arms.push_back({static_cast<double>(i)});
      sc.space.grid_dbm.push_back(static_cast<double>(i));
    }
    for (std::size_t i = 0; i < sc.bank->arm_count(); ++i) {
      GenieEstimate g;
      g.mean = sc.bank->means()[i];
      g.std = sc.bank->stds()[i];
      sc.truth.push_back(g);
    }
  } else {
    sc.deployment = scenario_deployment(cfg);
    const std::size_t k = sc.deployment->sbs_count();
    sc.space = enumerate_power_settings(k, sc.deployment->power_grid_dbm, cfg.power_threshold_db, chain_adjacency(k));
    const PifEvaluator evaluator(*sc.deployment);
    RngStream genie = root.derive("genie");
    sc.truth = genie_table(evaluator, sc.space.arms, cfg.genie_samples, genie);
  }
  RngStream oracle = root.derive("prior-oracle");
  const ScenarioEnvironment env = [&] {
    std::vector<std::size_t> all(sc.space.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return sc.environment(all);
  }();
  for (std::size_t i = 0; i < sc.space.size(); ++i) {
    RngStream rng = oracle.derive("arm/" + std::to_string(i));
    sc.oracle.push_back(detail::sample_moments([&] { return env.pull(i, rng); }, cfg.prior_samples));
  }
  if (cfg.clusters && *cfg.clusters > sc.space.size()) {
    throw ConfigError("cluster count N=" + std::to_string(*cfg.clusters) + " exceeds the " +
                      std::to_string(sc.space.size()) + " available arms");
  }
  if (cfg.algorithm == Algorithm::fixed && cfg.fixed_arm >= (cfg.clusters ? *cfg.clusters : sc.space.size())) {
    throw ConfigError("fixed_arm " + std::to_string(cfg.fixed_arm) + " is out of range");
  }
  if (cfg.algorithm == Algorithm::heuristic && sc.space.sbs_count != 1) {
    throw ConfigError("the heuristic baseline needs a single-SBS scenario");
  }
  return sc;
}

// ---------------------------------------------------------------------------
// Priors

/// Sigma0_ij = sigma0^2 exp(-||p_i - p_j|| / l); l = 0 gives sigma0^2 I.
inline Eigen::MatrixXd exponential_kernel(const std::vector<PowerSetting>& arms, double sigma0, double length_scale) {
  const auto n = static_cast<Eigen::Index>(arms.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  const double var = sigma0 * sigma0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cov(i, i) = var;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = euclidean_distance(arms[static_cast<std::size_t>(i)], arms[static_cast<std::size_t>(j)]);
      const double rho = length_scale > 0.0 ? std::exp(-d / length_scale) : 0.0;
      cov(i, j) = cov(j, i) = var * rho;
    }
  }
  return cov;
}

inline GaussianPrior make_kernel_prior(const std::vector<PowerSetting>& arms, std::span<const double> mean,
                                       double sigma0, double length_scale) {
  if (mean.size() != arms.size()) throw ConfigError("prior mean does not match the arm count");
  Eigen::VectorXd mu(static_cast<Eigen::Index>(mean.size()));
  for (std::size_t i = 0; i < mean.size(); ++i) mu(static_cast<Eigen::Index>(i)) = mean[i];
  return GaussianPrior(std::move(mu), exponential_kernel(arms, sigma0, length_scale), sigma0);
}

/// Prior over the listed arms. sigma0 is the mean oracle std over them; a
/// good prior takes the oracle means, a poor one 50 everywhere.
inline GaussianPrior build_prior(const Scenario& sc, std::span<const std::size_t> arms, PriorQuality quality,
                                 double length_scale, std::span<const double> custom_mean = {},
                                 double custom_std = 0.0) {
  std::vector<PowerSetting> settings;
  double sigma0 = 0.0;
  std::vector<double> mean;
  for (const std::size_t a : arms) {
    settings.push_back(sc.space.arms.at(a));
    sigma0 += sc.oracle.at(a).std;
    mean.push_back(sc.oracle.at(a).mean);
  }
  sigma0 /= static_cast<double>(arms.size());
  switch (quality) {
    case PriorQuality::good: break;
    case PriorQuality::poor: std::fill(mean.begin(), mean.end(), kPoorPriorMean); break;
    case PriorQuality::custom:
      if (custom_mean.size() != arms.size()) {
        throw ConfigError("custom prior has " + std::to_string(custom_mean.size()) + " means for " +
                          std::to_string(arms.size()) + " arms");
      }
      mean.assign(custom_mean.begin(), custom_mean.end());
      if (custom_std > 0.0) sigma0 = custom_std;
      break;
  }
  if (!(sigma0 > 0.0)) throw ConfigError("prior sigma0 is zero: the oracle saw no reward variation");
  return make_kernel_prior(settings, mean, sigma0, length_scale);
}

// ---------------------------------------------------------------------------
// Regret

struct RegretCurves {
  std::vector<double> pseudo;    // sum (mu* - mu_a(t)) + switching charges
  std::vector<double> realized;  // t mu* - (G_t - SC(t))
  std::vector<double> switches;  // cumulative switch count
};

/// `arm_means` is indexed like the trace arms; `best_mean` is mu*.
inline RegretCurves compute_regret(const RunTrace& trace, std::span<const double> arm_means, double best_mean) {
  RegretCurves c;
  const std::size_t n = trace.horizon();
  c.pseudo.resize(n);
  c.realized.resize(n);
  c.switches.resize(n);
  double pseudo = 0.0;
  double realized = 0.0;
  double switches = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t a = trace.arms[t];
    if (a >= arm_means.size()) throw PreconditionError("compute_regret: arm outside the genie table");
    const double charge = trace.switch_charges.empty() ? 0.0 : trace.switch_charges[t];
    pseudo += best_mean - arm_means[a] + charge;
    realized += best_mean - (trace.rewards[t] - charge);
    if (t > 0 && a != trace.arms[t - 1]) switches += 1.0;
    c.pseudo[t] = pseudo;
    c.realized[t] = realized;
    c.switches[t] = switches;
  }
  return c;
}

/// First slot (1-based) from which `arm` is held for at least `hold` of the
/// remaining slots; nullopt when no such slot exists.
inline std::optional<std::uint64_t> convergence_slot(std::span<const std::size_t> arms, std::size_t arm,
                                                     double hold = 0.95) {
  const std::size_t n = arms.size();
  std::optional<std::uint64_t> first;
  std::size_t hits = 0;
  for (std::size_t k = n; k-- > 0;) {
    if (arms[k] == arm) ++hits;
    const std::size_t remaining = n - k;
    if (static_cast<double>(hits) >= hold * static_cast<double>(remaining) - 1e-12) first = k + 1;
  }
  return first;
}

// ---------------------------------------------------------------------------
// Experiment

struct RepetitionSummary {
  std::size_t index = 0;
  double final_regret = 0.0;
  double final_realized_regret = 0.0;
  double final_window_loss = 0.0;  // per-slot pseudo-regret over the final window
  std::size_t switches = 0;
  std::optional<std::uint64_t> convergence;
  std::size_t modal_arm = 0;       // index into the full arm space
  double switching_total = 0.0;
  double net_reward = 0.0;
};

struct ExperimentResult {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::size_t> played_arms;  // full-space index of each policy arm
  std::size_t optimal_arm = 0;           // full-space genie optimum
  double optimal_mean = 0.0;
  std::vector<double> mean_regret;
  std::vector<double> std_regret;
  std::vector<double> mean_switches;
  std::vector<double> mean_realized_regret;
  std::vector<RepetitionSummary> runs;

  [[nodiscard]] double mean_final_window_loss() const {
    double s = 0.0;
    for (const auto& r : runs) s += r.final_window_loss;
    return s / static_cast<double>(runs.size());
  }
  [[nodiscard]] std::pair<double, double> switch_mean_and_se() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(static_cast<double>(r.switches));
    return mean_and_standard_error(v);
  }
  [[nodiscard]] std::pair<double, double> final_regret_mean_and_se() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.final_regret);
    return mean_and_standard_error(v);
  }

  static std::pair<double, double> mean_and_standard_error(const std::vector<double>& v) {
    double m = 0.0;
    for (const double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return {m, sd / std::sqrt(static_cast<double>(v.size()))};
  }
};

inline std::string format_g9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

/// Canonical text form of a configuration; its FNV-1a hash tags every output.
inline std::string canonical_string(const ExperimentConfig& c) {
  std::string s;
  auto add = [&](const std::string& k, const std::string& v) { s += k + "=" + v + ";"; };
  auto list = [](const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_g9(v[i]);
    return out + "]";
  };
  add("scenario", to_string(c.scenario));
  add("algorithm", to_string(c.algorithm));
  add("prior", to_string(c.prior));
  add("custom_prior_mean", list(c.custom_prior_mean));
  add("custom_prior_std", format_g9(c.custom_prior_std));
  add("length_scale", format_g9(c.length_scale_db));
  add("horizon", std::to_string(c.horizon));
  add("repetitions", std::to_string(c.repetitions));
  add("seed", std::to_string(c.seed));
  add("gamma", format_g9(c.gamma));
  add("clusters", c.clusters ? std::to_string(*c.clusters) : "none");
  add("sinr_threshold", c.sinr_threshold_db ? format_g9(*c.sinr_threshold_db) : "default");
  add("power_threshold", format_g9(c.power_threshold_db));
  if (c.deployment) {
    const Deployment& d = *c.deployment;
    std::vector<double> flat;
    for (const auto& p : d.sbs_positions) flat.insert(flat.end(), {p.x, p.y});
    for (const auto& p : d.mbs_positions) flat.insert(flat.end(), {p.x, p.y});
    for (const auto* routes : {&d.indoor_routes, &d.outdoor_routes}) {
      for (const auto& r : *routes) {
        flat.insert(flat.end(), {r.center.x, r.center.y, r.radius_x, r.radius_y, static_cast<double>(r.points)});
      }
    }
    flat.insert(flat.end(), {d.mbs_power_dbm, d.wall_loss_db, d.mbs_shadow_std_db, d.sbs_shadow_std_db, d.alpha,
                             d.sinr_threshold_db, d.noise_floor_dbm, d.min_distance_m});
    add("deployment", list(flat));
    add("grid", list(d.power_grid_dbm));
  }
  if (c.scenario == ScenarioKind::synthetic) {
    add("synthetic.kind", to_string(c.synthetic.kind));
    add("synthetic.means", list(c.synthetic.means));
    add("synthetic.stds", list(c.synthetic.stds));
  }
  add("genie_samples", std::to_string(c.genie_samples));
  add("prior_samples", std::to_string(c.prior_samples));
  add("fixed_arm", std::to_string(c.fixed_arm));
  add("heuristic_dwell", std::to_string(c.heuristic_dwell));
  add("heuristic_step", format_g9(c.heuristic_step_db));
  add("kmedoids_max_iter", std::to_string(c.kmedoids_max_iter));
  add("convergence_hold", format_g9(c.convergence_hold));
  add("final_window_fraction", format_g9(c.final_window_fraction));
  return s;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a64(canonical_string(c))));
  return buf;
}

/// Arms the policy plays: the whole space, or K-medoids representatives of
/// the power vectors when a cluster count is set.
inline std::vector<std::size_t> select_played_arms(const ExperimentConfig& cfg, const Scenario& sc,
                                                   KMedoidsResult* clustering = nullptr) {
  std::vector<std::size_t> arms;
  if (!cfg.clusters) {
    for (std::size_t i = 0; i < sc.space.size(); ++i) arms.push_back(i);
    return arms;
  }
  RngStream rng(cfg.seed, "kmedoids");
  KMedoidsResult km = k_medoids(cluster_features(sc.space), *cfg.clusters, cfg.kmedoids_max_iter, rng);
  arms = km.medoids;
  std::sort(arms.begin(), arms.end());
  if (clustering) *clustering = std::move(km);
  return arms;
}

namespace detail {

inline RunTrace run_policy(const ExperimentConfig& cfg, const Scenario& sc, const ScenarioEnvironment& env,
                           std::span<const std::size_t> played, const std::optional<GaussianPrior>& prior,
                           RngStream& rng) {
  const SwitchingCostFn cost = SwitchingCostFn::linear(cfg.gamma);
  const bool blocks = uses_blocks(cfg.algorithm);
  auto run = [&](auto& policy) {
    if (blocks) return run_with_switching(policy, env, build_block_schedule(cfg.horizon), cost, rng, cfg.horizon);
    return run_per_slot(policy, env, cfg.horizon, cost, rng);
  };
  switch (cfg.algorithm) {
    case Algorithm::uipa:
    case Algorithm::uipa_sc: {
      UipaPolicy p(played.size());
      return run(p);
    }
    case Algorithm::bpa:
    case Algorithm::bpa_sc: {
      BpaPolicy p(prior->diagonal_view());
      return run(p);
    }
    case Algorithm::cbpa:
    case Algorithm::cbpa_sc: {
      CbpaPolicy p(*prior);
      return run(p);
    }
    case Algorithm::heuristic: {
      std::vector<double> grid;
      for (const std::size_t a : played) grid.push_back(sc.space.arms[a][0]);
      HeuristicPolicy p(make_heuristic_state(grid, cfg.heuristic_dwell, cfg.heuristic_step_db));
      return run(p);
    }
    case Algorithm::fixed: {
      FixedPolicy p(played.size(), cfg.fixed_arm);
      return run(p);
    }
  }
  throw ConfigError("unsupported algorithm");
}

}  // namespace detail

/// R seeded repetitions on a prepared scenario. Repetition r draws all of
/// its randomness from the stream "rep/<r>", so results depend only on the
/// configuration.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Scenario& sc) {
  cfg.validate();
  ExperimentResult res;
  res.config_hash = config_hash(cfg);
  res.seed = cfg.seed;
  res.played_arms = select_played_arms(cfg, sc);
  res.optimal_arm = sc.best_arm();
  res.optimal_mean = sc.truth[res.optimal_arm].mean;

  const auto& played = res.played_arms;
  std::vector<double> played_means;
  for (const std::size_t a : played) played_means.push_back(sc.truth[a].mean);
  const std::size_t best_played =
      static_cast<std::size_t>(std::max_element(played_means.begin(), played_means.end()) - played_means.begin());

  std::optional<GaussianPrior> prior;
  if (cfg.algorithm != Algorithm::uipa && cfg.algorithm != Algorithm::uipa_sc &&
      cfg.algorithm != Algorithm::heuristic && cfg.algorithm != Algorithm::fixed) {
    prior = build_prior(sc, played, cfg.prior, cfg.length_scale_db, cfg.custom_prior_mean, cfg.custom_prior_std);
  }
  if (cfg.algorithm == Algorithm::fixed && cfg.fixed_arm >= played.size()) {
    throw ConfigError("fixed_arm " + std::to_string(cfg.fixed_arm) + " is out of range");
  }
  const ScenarioEnvironment env = sc.environment(played);

  const std::size_t t_max = cfg.horizon;
  std::vector<double> sum(t_max, 0.0), sum_sq(t_max, 0.0), sw(t_max, 0.0), real(t_max, 0.0);
  const RngStream root(cfg.seed, "experiment");
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.final_window_fraction *
                                                                                    static_cast<double>(t_max))));
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    RngStream rng = root.derive("rep/" + std::to_string(r));
    const RunTrace trace = detail::run_policy(cfg, sc, env, played, prior, rng);
    const RegretCurves curves = compute_regret(trace, played_means, res.optimal_mean);
    for (std::size_t t = 0; t < t_max; ++t) {
      sum[t] += curves.pseudo[t];
      sum_sq[t] += curves.pseudo[t] * curves.pseudo[t];
      sw[t] += curves.switches[t];
      real[t] += curves.realized[t];
    }
    RepetitionSummary s;
    s.index = r;
    s.final_regret = curves.pseudo.back();
    s.final_realized_regret = curves.realized.back();
    const double before = t_max > window ? curves.pseudo[t_max - window - 1] : 0.0;
    s.final_window_loss = (curves.pseudo.back() - before) / static_cast<double>(window);
    s.switches = trace.switch_count();
    s.convergence = convergence_slot(trace.arms, best_played, cfg.convergence_hold);
    s.modal_arm = played[trace.modal_arm(window, played.size())];
    s.switching_total = trace.switching_total();
    s.net_reward = trace.net_reward();
    res.runs.push_back(s);
  }
  const auto rr = static_cast<double>(cfg.repetitions);
  res.mean_regret.resize(t_max);
  res.std_regret.resize(t_max);
  res.mean_switches.resize(t_max);
  res.mean_realized_regret.resize(t_max);
  for (std::size_t t = 0; t < t_max; ++t) {
    const double m = sum[t] / rr;
    res.mean_regret[t] = m;
    res.std_regret[t] = cfg.repetitions > 1 ? std::sqrt(std::max(0.0, (sum_sq[t] - rr * m * m) / (rr - 1.0))) : 0.0;
    res.mean_switches[t] = sw[t] / rr;
    res.mean_realized_regret[t] = real[t] / rr;
  }
  return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, prepare_scenario(cfg)); }

// ---------------------------------------------------------------------------
// CSV

inline void write_regret_csv(std::ostream& os, const ExperimentResult& res) {
  os << "slot,mean_regret,std_regret,mean_switches,mean_realized_regret,config_hash,seed\n";
  for (std::size_t t = 0; t < res.mean_regret.size(); ++t) {
    os << (t + 1) << ',' << format_g9(res.mean_regret[t]) << ',' << format_g9(res.std_regret[t]) << ','
       << format_g9(res.mean_switches[t]) << ',' << format_g9(res.mean_realized_regret[t]) << ',' << res.config_hash
       << ',' << res.seed << '\n';
  }
}

/// One row per repetition; convergence_slot is empty when never reached.
inline void write_runs_csv(std::ostream& os, const ExperimentResult& res, const Scenario& sc) {
  os << "rep,final_regret,final_realized_regret,final_window_loss,switches,convergence_slot,modal_arm";
  const std::size_t k = sc.space.sbs_count;
  for (std::size_t j = 0; j < k; ++j) os << (k == 1 ? std::string(",modal_power_dbm") : ",modal_power_dbm_" + std::to_string(j + 1));
  os << ",config_hash,seed\n";
  for (const auto& r : res.runs) {
    os << r.index << ',' << format_g9(r.final_regret) << ',' << format_g9(r.final_realized_regret) << ','
       << format_g9(r.final_window_loss) << ',' << r.switches << ',';
    if (r.convergence) os << *r.convergence;
    os << ',' << r.modal_arm;
    for (const double p : sc.space.arms[r.modal_arm]) os << ',' << format_g9(p);
    os << ',' << res.config_hash << ',' << res.seed << '\n';
  }
}

inline void write_power_header(std::ostream& os, std::size_t k) {
  if (k == 1) {
    os << ",power_dbm";
  } else {
    for (std::size_t j = 0; j < k; ++j) os << ",power_dbm_" << (j + 1);
  }
}

inline void write_genie_csv(std::ostream& os, const Scenario& sc, const std::string& hash, std::uint64_t seed) {
  os << "arm";
  write_power_header(os, sc.space.sbs_count);
  os << ",mean_pif,std_pif,std_error,config_hash,seed\n";
  for (std::size_t i = 0; i < sc.space.size(); ++i) {
    os << i;
    for (const double p : sc.space.arms[i]) os << ',' << format_g9(p);
    os << ',' << format_g9(sc.truth[i].mean) << ',' << format_g9(sc.truth[i].std) << ','
       << format_g9(sc.truth[i].std_error) << ',' << hash << ',' << seed << '\n';
  }
}

inline void write_cluster_csv(std::ostream& os, const Scenario& sc, const KMedoidsResult& km, const std::string& hash,
                              std::uint64_t seed) {
  os << "arm";
  write_power_header(os, sc.space.sbs_count);
  os << ",cluster,medoid_arm,is_medoid,mean_pif,config_hash,seed\n";
  for (std::size_t i = 0; i < sc.space.size(); ++i) {
    const std::size_t m = km.medoids[km.assignment[i]];
    os << i;
    for (const double p : sc.space.arms[i]) os << ',' << format_g9(p);
    os << ',' << km.assignment[i] << ',' << m << ',' << (m == i ? 1 : 0) << ',' << format_g9(sc.truth[i].mean) << ','
       << hash << ',' << seed << '\n';
  }
}

}  // namespace pilotpower
