#pragma once

// Heterogeneous-network reward model: enterprise geometry, path loss with
// log-normal shadowing, best-server SINR along measurement routes, and the
// coverage/leakage performance indication function (PIF).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilotpower/errors.hpp"
#include "pilotpower/stats.hpp"

namespace pilotpower {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Closed measurement route: an ellipse (circle when both radii agree)
/// sampled at `points` equally spaced angles.
struct Route {
  Point center;
  double radius_x = 0.0;
  double radius_y = 0.0;
  std::size_t points = 100;

  static Route circle(Point center, double radius, std::size_t points = 100) {
    return Route{center, radius, radius, points};
  }
  static Route ellipse(Point center, double rx, double ry, std::size_t points = 100) {
    return Route{center, rx, ry, points};
  }

  [[nodiscard]] std::vector<Point> sample() const {
    std::vector<Point> out;
    out.reserve(points);
    for (std::size_t k = 0; k < points; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
      out.push_back({center.x + radius_x * std::cos(theta), center.y + radius_y * std::sin(theta)});
    }
    return out;
  }
};

/// Thermal noise power over a bandwidth, in dBm.
inline double noise_floor_dbm(double density_dbm_per_hz, double bandwidth_hz) {
  return density_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
}

struct Deployment {
  std::vector<Point> sbs_positions;
  std::vector<Point> mbs_positions;
  double mbs_power_dbm = 40.0;
  std::vector<Route> indoor_routes;
  std::vector<Route> outdoor_routes;
  double wall_loss_db = 20.0;
  double mbs_shadow_std_db = 8.0;  // sigma, MBS links
  double sbs_shadow_std_db = 4.0;  // sigma', SBS links
  double alpha = 0.7;
  double sinr_threshold_db = 0.0;
  double noise_floor_dbm = pilotpower::noise_floor_dbm(-174.0, 20e6);
  std::vector<double> power_grid_dbm;
  double min_distance_m = 1.0;

  void validate() const {
    if (sbs_positions.empty()) throw ConfigError("Deployment: no SBS");
    if (mbs_positions.empty()) throw ConfigError("Deployment: no MBS");
    if (indoor_routes.empty() || outdoor_routes.empty()) {
      throw ConfigError("Deployment: needs at least one indoor and one outdoor route");
    }
    for (const auto* routes : {&indoor_routes, &outdoor_routes}) {
      for (const Route& r : *routes) {
        if (r.points < 1) throw ConfigError("Deployment: route with no measurement points");
      }
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("Deployment: alpha must lie in [0, 1]");
    if (!(min_distance_m > 0.0)) throw ConfigError("Deployment: min_distance must be > 0");
    if (mbs_shadow_std_db < 0.0 || sbs_shadow_std_db < 0.0) {
      throw ConfigError("Deployment: shadowing std must be >= 0");
    }
    if (power_grid_dbm.empty()) throw ConfigError("Deployment: empty power grid");
  }

  [[nodiscard]] std::size_t sbs_count() const { return sbs_positions.size(); }
};

/// Power grid from `lo` to `hi` inclusive in `step` dB increments.
inline std::vector<double> power_grid(double lo, double hi, double step) {
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) grid.push_back(lo + step * static_cast<double>(i));
  return grid;
}

/// Single SBS in a 30 m x 30 m enterprise: SBS at (12, 8), MBS at (100, 100),
/// indoor circles of radius 2 and 13 m, outdoor circles of 24 and 30 m, all
/// centred on the building, 100 points each; grid -10..20 dBm in 2 dB steps.
inline Deployment single_sbs_deployment() {
  Deployment d;
  d.sbs_positions = {{12.0, 8.0}};
  d.mbs_positions = {{100.0, 100.0}};
  d.indoor_routes = {Route::circle({0, 0}, 2.0), Route::circle({0, 0}, 13.0)};
  d.outdoor_routes = {Route::circle({0, 0}, 24.0), Route::circle({0, 0}, 30.0)};
  d.power_grid_dbm = power_grid(-10.0, 20.0, 2.0);
  return d;
}

namespace detail {

// Routes of the single-SBS layout rescaled to a W x H building.
inline void scaled_routes(Deployment& d, double width, double height) {
  const double sx = (width / 2.0) / 15.0;
  const double sy = (height / 2.0) / 15.0;
  d.indoor_routes = {Route::ellipse({0, 0}, 2.0 * sx, 2.0 * sy), Route::ellipse({0, 0}, 13.0 * sx, 13.0 * sy)};
  d.outdoor_routes = {Route::ellipse({0, 0}, 24.0 * sx, 24.0 * sy), Route::ellipse({0, 0}, 30.0 * sx, 30.0 * sy)};
}

}  // namespace detail

/// Two SBSs in a 40 m x 40 m enterprise; grid -10..20 dBm in 5 dB steps.
inline Deployment two_sbs_deployment() {
  Deployment d;
  d.sbs_positions = {{16.0, 17.0}, {-15.0, -11.0}};
  d.mbs_positions = {{100.0, 100.0}};
  detail::scaled_routes(d, 40.0, 40.0);
  d.power_grid_dbm = power_grid(-10.0, 20.0, 5.0);
  return d;
}

/// Four SBSs in a 50 m x 40 m enterprise; grid -10..20 dBm in 5 dB steps.
inline Deployment four_sbs_deployment() {
  Deployment d;
  d.sbs_positions = {{20.0, 18.0}, {11.0, -19.0}, {-11.0, 18.5}, {-10.5, -19.0}};
  d.mbs_positions = {{100.0, 100.0}};
  detail::scaled_routes(d, 50.0, 40.0);
  d.power_grid_dbm = power_grid(-10.0, 20.0, 5.0);
  return d;
}

enum class Link { indoor_to_mbs, outdoor_to_mbs, indoor_to_sbs, outdoor_to_sbs };

/// Deterministic path loss in dB (no shadowing); d is clamped to d0.
inline double path_loss(Link link, double d, double wall_loss_db = 20.0, double min_distance_m = 1.0) {
  const double dd = std::max(d, min_distance_m);
  const double macro = 15.3 + 37.6 * std::log10(dd);
  const double femto = 38.46 + 20.0 * std::log10(dd);
  switch (link) {
    case Link::indoor_to_mbs:
      return macro + wall_loss_db;
    case Link::outdoor_to_mbs:
      return macro;
    case Link::indoor_to_sbs:
      return femto;
    case Link::outdoor_to_sbs:
      return std::max(macro, femto) + wall_loss_db;
  }
  return macro;
}

inline double db_to_linear(double db) { return std::exp(db * (std::numbers::ln10 / 10.0)); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Which base-station class serves the point: SBSs serve the indoor routes,
/// MBSs the outdoor ones.
enum class ServingClass { sbs, mbs };

/// Best-server SINR in dB at a point. Shadow draws are in dB, one per SBS and
/// one per MBS, added to the path loss of the corresponding link.
inline double sinr_at_point(const Point& point, ServingClass serving, std::span<const double> sbs_power_dbm,
                            std::span<const double> sbs_shadow_db, std::span<const double> mbs_shadow_db,
                            const Deployment& dep) {
  const bool indoor = serving == ServingClass::sbs;
  const std::size_t k = dep.sbs_count();
  const std::size_t km = dep.mbs_positions.size();
  if (sbs_power_dbm.size() != k || sbs_shadow_db.size() != k || mbs_shadow_db.size() != km) {
    throw PreconditionError("sinr_at_point: power/shadow vectors do not match the deployment");
  }
  std::vector<double> rx_sbs(k);
  std::vector<double> rx_mbs(km);
  for (std::size_t i = 0; i < k; ++i) {
    const Link link = indoor ? Link::indoor_to_sbs : Link::outdoor_to_sbs;
    const double pl = path_loss(link, distance(point, dep.sbs_positions[i]), dep.wall_loss_db, dep.min_distance_m);
    rx_sbs[i] = db_to_linear(sbs_power_dbm[i] - pl - sbs_shadow_db[i]);
  }
  for (std::size_t j = 0; j < km; ++j) {
    const Link link = indoor ? Link::indoor_to_mbs : Link::outdoor_to_mbs;
    const double pl = path_loss(link, distance(point, dep.mbs_positions[j]), dep.wall_loss_db, dep.min_distance_m);
    rx_mbs[j] = db_to_linear(dep.mbs_power_dbm - pl - mbs_shadow_db[j]);
  }
  const double noise = db_to_linear(dep.noise_floor_dbm);
  double total_sbs = 0.0;
  double total_mbs = 0.0;
  for (const double p : rx_sbs) total_sbs += p;
  for (const double p : rx_mbs) total_mbs += p;

  double best = 0.0;
  if (indoor) {
    for (std::size_t i = 0; i < k; ++i) {
      double others = 0.0;
      for (std::size_t m = 0; m < k; ++m) {
        if (m != i) others += rx_sbs[m];
      }
      best = std::max(best, rx_sbs[i] / (others + total_mbs + noise));
    }
  } else {
    for (std::size_t j = 0; j < km; ++j) {
      double others = 0.0;
      for (std::size_t m = 0; m < km; ++m) {
        if (m != j) others += rx_mbs[m];
      }
      best = std::max(best, rx_mbs[j] / (total_sbs + others + noise));
    }
  }
  return linear_to_db(best);
}

/// Coverage/leakage percentages and r = alpha eta_in - (1 - alpha) eta_out.
struct PifSample {
  double eta_in = 0.0;
  double eta_out = 0.0;
  double r = 0.0;
};

inline PifSample make_pif_sample(double alpha, double eta_in, double eta_out) {
  return PifSample{eta_in, eta_out, alpha * eta_in - (1.0 - alpha) * eta_out};
}

/// Shadowing realization for one slot: per measurement point, one draw per
/// SBS followed by one per MBS (dB).
struct ShadowDraws {
  std::vector<double> indoor;
  std::vector<double> outdoor;
};

/// Linear gains of every (point, transmitter) link for one realization.
struct LinkGains {
  std::vector<double> indoor;
  std::vector<double> outdoor;
};

/// Evaluates the PIF of a deployment with the geometry and deterministic path
/// losses precomputed. Immutable after construction, so it can be shared.
class PifEvaluator {
 public:
  explicit PifEvaluator(Deployment dep) : dep_(std::move(dep)) {
    dep_.validate();
    for (const Route& r : dep_.indoor_routes) {
      const auto pts = r.sample();
      indoor_points_.insert(indoor_points_.end(), pts.begin(), pts.end());
    }
    for (const Route& r : dep_.outdoor_routes) {
      const auto pts = r.sample();
      outdoor_points_.insert(outdoor_points_.end(), pts.begin(), pts.end());
    }
    indoor_loss_ = link_losses(indoor_points_, true);
    outdoor_loss_ = link_losses(outdoor_points_, false);
    noise_ = db_to_linear(dep_.noise_floor_dbm);
    threshold_ = db_to_linear(dep_.sinr_threshold_db);
    mbs_power_ = db_to_linear(dep_.mbs_power_dbm);
  }

  [[nodiscard]] const Deployment& deployment() const { return dep_; }
  [[nodiscard]] std::size_t indoor_point_count() const { return indoor_points_.size(); }
  [[nodiscard]] std::size_t outdoor_point_count() const { return outdoor_points_.size(); }
  [[nodiscard]] std::size_t transmitter_count() const { return dep_.sbs_count() + dep_.mbs_positions.size(); }

  [[nodiscard]] ShadowDraws draw_shadows(RngStream& rng) const {
    ShadowDraws s;
    s.indoor.resize(indoor_points_.size() * transmitter_count());
    s.outdoor.resize(outdoor_points_.size() * transmitter_count());
    fill_shadows(s.indoor, rng);
    fill_shadows(s.outdoor, rng);
    return s;
  }

  /// Linear link gains 10^(-(L + shadow)/10) of one shadowing realization.
  [[nodiscard]] LinkGains link_gains(const ShadowDraws& shadows) const {
    LinkGains g;
    g.indoor.resize(indoor_loss_.size());
    g.outdoor.resize(outdoor_loss_.size());
    for (std::size_t i = 0; i < g.indoor.size(); ++i) g.indoor[i] = db_to_linear(-indoor_loss_[i] - shadows.indoor.at(i));
    for (std::size_t i = 0; i < g.outdoor.size(); ++i) {
      g.outdoor[i] = db_to_linear(-outdoor_loss_[i] - shadows.outdoor.at(i));
    }
    return g;
  }

  [[nodiscard]] PifSample evaluate(std::span<const double> sbs_power_dbm, const LinkGains& gains) const {
    check_powers(sbs_power_dbm);
    constexpr std::size_t kStack = 16;
    double stack_buf[kStack];
    std::vector<double> heap_buf;
    double* power = stack_buf;
    if (sbs_power_dbm.size() > kStack) {
      heap_buf.resize(sbs_power_dbm.size());
      power = heap_buf.data();
    }
    for (std::size_t i = 0; i < sbs_power_dbm.size(); ++i) power[i] = db_to_linear(sbs_power_dbm[i]);
    std::size_t covered = 0;
    std::size_t leaked = 0;
    for (std::size_t n = 0; n < indoor_points_.size(); ++n) {
      if (best_sinr(n, true, power, gains.indoor) > threshold_) ++covered;
    }
    for (std::size_t n = 0; n < outdoor_points_.size(); ++n) {
      if (best_sinr(n, false, power, gains.outdoor) < threshold_) ++leaked;
    }
    const double eta_in = 100.0 * static_cast<double>(covered) / static_cast<double>(indoor_points_.size());
    const double eta_out = 100.0 * static_cast<double>(leaked) / static_cast<double>(outdoor_points_.size());
    return make_pif_sample(dep_.alpha, eta_in, eta_out);
  }

  [[nodiscard]] PifSample evaluate(std::span<const double> sbs_power_dbm, const ShadowDraws& shadows) const {
    return evaluate(sbs_power_dbm, link_gains(shadows));
  }

  /// Fresh i.i.d. shadowing per (point, transmitter).
  [[nodiscard]] PifSample evaluate(std::span<const double> sbs_power_dbm, RngStream& rng) const {
    return evaluate(sbs_power_dbm, draw_shadows(rng));
  }

 private:
  void check_powers(std::span<const double> p) const {
    if (p.size() != dep_.sbs_count()) {
      throw PreconditionError("PifEvaluator: power setting has " + std::to_string(p.size()) + " entries, expected " +
                              std::to_string(dep_.sbs_count()));
    }
  }

  void fill_shadows(std::vector<double>& out, RngStream& rng) const {
    const std::size_t k = dep_.sbs_count();
    const std::size_t per_point = transmitter_count();
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
      const bool sbs_link = (idx % per_point) < k;
      out[idx] = (sbs_link ? dep_.sbs_shadow_std_db : dep_.mbs_shadow_std_db) * rng.gaussian();
    }
  }

  [[nodiscard]] std::vector<double> link_losses(const std::vector<Point>& pts, bool indoor) const {
    std::vector<double> loss;
    loss.reserve(pts.size() * transmitter_count());
    for (const Point& p : pts) {
      for (const Point& s : dep_.sbs_positions) {
        loss.push_back(path_loss(indoor ? Link::indoor_to_sbs : Link::outdoor_to_sbs, distance(p, s),
                                 dep_.wall_loss_db, dep_.min_distance_m));
      }
      for (const Point& m : dep_.mbs_positions) {
        loss.push_back(path_loss(indoor ? Link::indoor_to_mbs : Link::outdoor_to_mbs, distance(p, m),
                                 dep_.wall_loss_db, dep_.min_distance_m));
      }
    }
    return loss;
  }

  // Best-server SINR (linear) at point n of the indoor or outdoor set, from
  // linear SBS powers (mW) and link gains.
  [[nodiscard]] double best_sinr(std::size_t n, bool indoor, const double* power,
                                 const std::vector<double>& gains) const {
    const std::size_t k = dep_.sbs_count();
    const std::size_t km = dep_.mbs_positions.size();
    const std::size_t per_point = k + km;
    const double* gain = gains.data() + n * per_point;

    constexpr std::size_t kStack = 16;
    double stack_buf[kStack];
    std::vector<double> heap_buf;
    double* rx = stack_buf;
    if (per_point > kStack) {
      heap_buf.resize(per_point);
      rx = heap_buf.data();
    }
    double total_sbs = 0.0;
    double total_mbs = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      rx[i] = power[i] * gain[i];
      total_sbs += rx[i];
    }
    for (std::size_t j = 0; j < km; ++j) {
      rx[k + j] = mbs_power_ * gain[k + j];
      total_mbs += rx[k + j];
    }
    double best = 0.0;
    if (indoor) {
      for (std::size_t i = 0; i < k; ++i) {
        const double others = (k == 1) ? 0.0 : sum_except(rx, 0, k, i);
        best = std::max(best, rx[i] / (others + total_mbs + noise_));
      }
    } else {
      for (std::size_t j = 0; j < km; ++j) {
        const double others = (km == 1) ? 0.0 : sum_except(rx, k, k + km, k + j);
        best = std::max(best, rx[k + j] / (total_sbs + others + noise_));
      }
    }
    return best;
  }

  static double sum_except(const double* v, std::size_t begin, std::size_t end, std::size_t skip) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      if (i != skip) s += v[i];
    }
    return s;
  }

  Deployment dep_;
  std::vector<Point> indoor_points_;
  std::vector<Point> outdoor_points_;
  std::vector<double> indoor_loss_;
  std::vector<double> outdoor_loss_;
  double noise_ = 0.0;
  double threshold_ = 1.0;
  double mbs_power_ = 0.0;
};

inline PifSample evaluate_pif(const Deployment& dep, std::span<const double> sbs_power_dbm, RngStream& rng) {
  return PifEvaluator(dep).evaluate(sbs_power_dbm, rng);
}

struct GenieEstimate {
  double mean = 0.0;
  double std = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo mean and standard deviation of the PIF of one power setting.
inline GenieEstimate genie_mean_pif(const PifEvaluator& evaluator, std::span<const double> sbs_power_dbm,
                                    std::size_t samples, RngStream& rng) {
  if (samples < 2) {
    throw ConfigError("genie_mean_pif: need at least 2 samples");
  }
  // Welford accumulation.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 1; s <= samples; ++s) {
    const double r = evaluator.evaluate(sbs_power_dbm, rng).r;
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

/// Genie table over many power settings. Every sample draws one shadowing
/// realization and evaluates all settings on it (common random numbers), so
/// each arm still sees `samples` i.i.d. draws while the shadowing cost is
/// shared.
inline std::vector<GenieEstimate> genie_table(const PifEvaluator& evaluator,
                                              const std::vector<std::vector<double>>& settings, std::size_t samples,
                                              RngStream& rng) {
  if (samples < 2) {
    throw ConfigError("genie_table: need at least 2 samples");
  }
  std::vector<double> mean(settings.size(), 0.0);
  std::vector<double> m2(settings.size(), 0.0);
  for (std::size_t s = 1; s <= samples; ++s) {
    const LinkGains gains = evaluator.link_gains(evaluator.draw_shadows(rng));
    for (std::size_t a = 0; a < settings.size(); ++a) {
      const double r = evaluator.evaluate(settings[a], gains).r;
      const double delta = r - mean[a];
      mean[a] += delta / static_cast<double>(s);
      m2[a] += delta * (r - mean[a]);
    }
  }
  std::vector<GenieEstimate> out(settings.size());
  for (std::size_t a = 0; a < settings.size(); ++a) {
    out[a].samples = samples;
    out[a].mean = mean[a];
    out[a].std = std::sqrt(std::max(0.0, m2[a] / static_cast<double>(samples - 1)));
    out[a].std_error = out[a].std / std::sqrt(static_cast<double>(samples));
  }
  return out;
}

inline GenieEstimate genie_mean_pif(const Deployment& dep, std::span<const double> sbs_power_dbm,
                                    std::size_t samples, RngStream& rng) {
  return genie_mean_pif(PifEvaluator(dep), sbs_power_dbm, samples, rng);
}

}  // namespace pilotpower
