#pragma once

// TOML loading of ExperimentConfig. Every key is optional; unknown keys are
// rejected so typos surface as configuration errors.

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "pilotpower/errors.hpp"
#include "pilotpower/experiment.hpp"

namespace pilotpower {

namespace detail {

inline void check_keys(const toml::table& t, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, node] : t) {
    bool ok = false;
    for (const auto a : allowed) ok = ok || key.str() == a;
    if (!ok) throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + where);
  }
}

inline double get_number(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError("'" + key + "' must be a number");
}

inline std::int64_t get_integer(const toml::node& n, const std::string& key, std::int64_t min_value) {
  const auto v = n.value<std::int64_t>();
  if (!v || !n.is_integer()) throw ConfigError("'" + key + "' must be an integer");
  if (*v < min_value) throw ConfigError("'" + key + "' must be >= " + std::to_string(min_value));
  return *v;
}

inline std::string get_string(const toml::node& n, const std::string& key) {
  if (auto v = n.value<std::string>()) return *v;
  throw ConfigError("'" + key + "' must be a string");
}

inline std::vector<double> get_number_list(const toml::node& n, const std::string& key) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *arr) out.push_back(get_number(e, key));
  return out;
}

inline std::vector<Point> get_points(const toml::node& n, const std::string& key) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError("'" + key + "' must be an array of [x, y] pairs");
  std::vector<Point> out;
  for (const auto& e : *arr) {
    const auto xy = get_number_list(e, key);
    if (xy.size() != 2) throw ConfigError("'" + key + "' entries must be [x, y]");
    out.push_back({xy[0], xy[1]});
  }
  return out;
}

inline std::vector<Route> get_routes(const toml::node& n, const std::string& key) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError("'" + key + "' must be an array of route tables");
  std::vector<Route> out;
  for (const auto& e : *arr) {
    const auto* t = e.as_table();
    if (!t) throw ConfigError("'" + key + "' entries must be tables");
    check_keys(*t, {"center", "radius", "radius_x", "radius_y", "points"}, key);
    Route r;
    if (const auto* c = t->get("center")) {
      const auto xy = get_number_list(*c, key + ".center");
      if (xy.size() != 2) throw ConfigError("'" + key + ".center' must be [x, y]");
      r.center = {xy[0], xy[1]};
    }
    if (const auto* v = t->get("radius")) r.radius_x = r.radius_y = get_number(*v, key + ".radius");
    if (const auto* v = t->get("radius_x")) r.radius_x = get_number(*v, key + ".radius_x");
    if (const auto* v = t->get("radius_y")) r.radius_y = get_number(*v, key + ".radius_y");
    if (const auto* v = t->get("points")) r.points = static_cast<std::size_t>(get_integer(*v, key + ".points", 1));
    out.push_back(r);
  }
  return out;
}

inline void apply_deployment(const toml::table& t, Deployment& d) {
  check_keys(t,
             {"sbs", "mbs", "mbs_power_dbm", "wall_loss_db", "mbs_shadow_std_db", "sbs_shadow_std_db", "alpha",
              "sinr_threshold_db", "noise_floor_dbm", "min_distance_m", "power_grid", "grid_lo_dbm", "grid_hi_dbm",
              "grid_step_db", "indoor_routes", "outdoor_routes"},
             "[deployment]");
  if (const auto* v = t.get("sbs")) d.sbs_positions = get_points(*v, "deployment.sbs");
  if (const auto* v = t.get("mbs")) d.mbs_positions = get_points(*v, "deployment.mbs");
  if (const auto* v = t.get("mbs_power_dbm")) d.mbs_power_dbm = get_number(*v, "deployment.mbs_power_dbm");
  if (const auto* v = t.get("wall_loss_db")) d.wall_loss_db = get_number(*v, "deployment.wall_loss_db");
  if (const auto* v = t.get("mbs_shadow_std_db")) d.mbs_shadow_std_db = get_number(*v, "deployment.mbs_shadow_std_db");
  if (const auto* v = t.get("sbs_shadow_std_db")) d.sbs_shadow_std_db = get_number(*v, "deployment.sbs_shadow_std_db");
  if (const auto* v = t.get("alpha")) d.alpha = get_number(*v, "deployment.alpha");
  if (const auto* v = t.get("sinr_threshold_db")) d.sinr_threshold_db = get_number(*v, "deployment.sinr_threshold_db");
  if (const auto* v = t.get("noise_floor_dbm")) d.noise_floor_dbm = get_number(*v, "deployment.noise_floor_dbm");
  if (const auto* v = t.get("min_distance_m")) d.min_distance_m = get_number(*v, "deployment.min_distance_m");
  if (const auto* v = t.get("power_grid")) d.power_grid_dbm = get_number_list(*v, "deployment.power_grid");
  const auto* lo = t.get("grid_lo_dbm");
  const auto* hi = t.get("grid_hi_dbm");
  const auto* step = t.get("grid_step_db");
  if (lo || hi || step) {
    if (!(lo && hi && step)) throw ConfigError("grid_lo_dbm, grid_hi_dbm and grid_step_db must be given together");
    const double s = get_number(*step, "deployment.grid_step_db");
    if (!(s > 0.0)) throw ConfigError("deployment.grid_step_db must be > 0");
    d.power_grid_dbm = power_grid(get_number(*lo, "deployment.grid_lo_dbm"), get_number(*hi, "deployment.grid_hi_dbm"), s);
  }
  if (const auto* v = t.get("indoor_routes")) d.indoor_routes = get_routes(*v, "deployment.indoor_routes");
  if (const auto* v = t.get("outdoor_routes")) d.outdoor_routes = get_routes(*v, "deployment.outdoor_routes");
}

}  // namespace detail

/// Applies the keys of a parsed TOML table on top of `cfg`.
inline void apply_toml(const toml::table& t, ExperimentConfig& cfg) {
  using namespace detail;
  check_keys(t,
             {"scenario", "algorithm", "prior", "length_scale", "horizon", "repetitions", "seed", "gamma", "clusters",
              "output", "sinr_threshold", "power_threshold", "genie_samples", "prior_samples", "fixed_arm",
              "kmedoids_max_iter", "convergence_hold", "final_window_fraction", "custom_prior", "heuristic",
              "synthetic", "deployment"},
             "the top level");
  if (const auto* v = t.get("scenario")) cfg.scenario = parse_scenario_kind(get_string(*v, "scenario"));
  if (const auto* v = t.get("algorithm")) cfg.algorithm = parse_algorithm(get_string(*v, "algorithm"));
  if (const auto* v = t.get("prior")) cfg.prior = parse_prior_quality(get_string(*v, "prior"));
  if (const auto* v = t.get("length_scale")) cfg.length_scale_db = get_number(*v, "length_scale");
  if (const auto* v = t.get("horizon")) cfg.horizon = static_cast<std::uint64_t>(get_integer(*v, "horizon", 1));
  if (const auto* v = t.get("repetitions")) cfg.repetitions = static_cast<std::size_t>(get_integer(*v, "repetitions", 1));
  if (const auto* v = t.get("seed")) cfg.seed = static_cast<std::uint64_t>(get_integer(*v, "seed", 0));
  if (const auto* v = t.get("gamma")) cfg.gamma = get_number(*v, "gamma");
  if (const auto* v = t.get("clusters")) cfg.clusters = static_cast<std::size_t>(get_integer(*v, "clusters", 1));
  if (const auto* v = t.get("output")) cfg.output = get_string(*v, "output");
  if (const auto* v = t.get("sinr_threshold")) cfg.sinr_threshold_db = get_number(*v, "sinr_threshold");
  if (const auto* v = t.get("power_threshold")) cfg.power_threshold_db = get_number(*v, "power_threshold");
  if (const auto* v = t.get("genie_samples")) cfg.genie_samples = static_cast<std::size_t>(get_integer(*v, "genie_samples", 2));
  if (const auto* v = t.get("prior_samples")) cfg.prior_samples = static_cast<std::size_t>(get_integer(*v, "prior_samples", 2));
  if (const auto* v = t.get("fixed_arm")) cfg.fixed_arm = static_cast<std::size_t>(get_integer(*v, "fixed_arm", 0));
  if (const auto* v = t.get("kmedoids_max_iter")) {
    cfg.kmedoids_max_iter = static_cast<std::size_t>(get_integer(*v, "kmedoids_max_iter", 1));
  }
  if (const auto* v = t.get("convergence_hold")) cfg.convergence_hold = get_number(*v, "convergence_hold");
  if (const auto* v = t.get("final_window_fraction")) cfg.final_window_fraction = get_number(*v, "final_window_fraction");
  if (const auto* sub = t.get_as<toml::table>("custom_prior")) {
    check_keys(*sub, {"mean", "std"}, "[custom_prior]");
    if (const auto* v = sub->get("mean")) cfg.custom_prior_mean = get_number_list(*v, "custom_prior.mean");
    if (const auto* v = sub->get("std")) cfg.custom_prior_std = get_number(*v, "custom_prior.std");
  }
  if (const auto* sub = t.get_as<toml::table>("heuristic")) {
    check_keys(*sub, {"dwell", "step_db"}, "[heuristic]");
    if (const auto* v = sub->get("dwell")) cfg.heuristic_dwell = static_cast<std::uint64_t>(get_integer(*v, "heuristic.dwell", 1));
    if (const auto* v = sub->get("step_db")) cfg.heuristic_step_db = get_number(*v, "heuristic.step_db");
  }
  if (const auto* sub = t.get_as<toml::table>("synthetic")) {
    check_keys(*sub, {"kind", "means", "stds"}, "[synthetic]");
    if (const auto* v = sub->get("kind")) cfg.synthetic.kind = parse_bank_kind(get_string(*v, "synthetic.kind"));
    if (const auto* v = sub->get("means")) cfg.synthetic.means = get_number_list(*v, "synthetic.means");
    if (const auto* v = sub->get("stds")) cfg.synthetic.stds = get_number_list(*v, "synthetic.stds");
  }
  if (const auto* sub = t.get_as<toml::table>("deployment")) {
    if (cfg.scenario == ScenarioKind::synthetic) throw ConfigError("[deployment] is not valid for a synthetic scenario");
    ExperimentConfig preset = cfg;
    preset.deployment.reset();
    preset.sinr_threshold_db.reset();
    Deployment d = cfg.deployment ? *cfg.deployment : scenario_deployment(preset);
    apply_deployment(*sub, d);
    d.validate();
    cfg.deployment = std::move(d);
  }
}

inline ExperimentConfig parse_config_string(std::string_view text, const std::string& source = "config") {
  ExperimentConfig cfg;
  try {
    const toml::table t = toml::parse(text, source);
    apply_toml(t, cfg);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ": " + std::string(e.description()));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg;
  try {
    const toml::table t = toml::parse_file(path);
    apply_toml(t, cfg);
  } catch (const toml::parse_error& e) {
    throw ConfigError(path + ": " + std::string(e.description()));
  }
  return cfg;
}

}  // namespace pilotpower
