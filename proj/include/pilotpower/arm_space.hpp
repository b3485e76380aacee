#pragma once

// Multi-SBS arm enumeration under a neighbour power-difference limit, and
// K-medoids reduction of large arm sets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilotpower/errors.hpp"
#include "pilotpower/stats.hpp"

namespace pilotpower {

using PowerSetting = std::vector<double>;
using Adjacency = std::vector<std::pair<std::size_t, std::size_t>>;

/// Neighbouring SBSs k and k+1.
inline Adjacency chain_adjacency(std::size_t sbs_count) {
  Adjacency adj;
  for (std::size_t k = 1; k < sbs_count; ++k) adj.emplace_back(k - 1, k);
  return adj;
}

struct ArmSpace {
  std::size_t sbs_count = 1;
  std::vector<double> grid_dbm;
  Adjacency adjacency;
  double power_threshold_db = std::numeric_limits<double>::infinity();
  std::vector<PowerSetting> arms;  // lexicographic, duplicate-free
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t size() const { return arms.size(); }
  [[nodiscard]] std::span<const double> powers(std::size_t arm) const { return arms.at(arm); }

  /// Sub-space holding only the listed arms, in the given order.
  [[nodiscard]] ArmSpace subset(std::span<const std::size_t> indices) const {
    ArmSpace out = *this;
    out.arms.clear();
    for (const std::size_t i : indices) out.arms.push_back(arms.at(i));
    return out;
  }

  [[nodiscard]] bool admissible(const PowerSetting& p) const {
    for (const auto& [a, b] : adjacency) {
      if (std::abs(p[a] - p[b]) > power_threshold_db + 1e-9) return false;
    }
    return true;
  }
};

/// All K-tuples over the grid whose adjacent SBSs differ by at most P_th.
inline ArmSpace enumerate_power_settings(std::size_t sbs_count, std::vector<double> grid, double threshold_db,
                                         Adjacency adjacency) {
  if (sbs_count < 1) throw ConfigError("enumerate_power_settings: need at least one SBS");
  if (grid.empty()) throw ConfigError("enumerate_power_settings: empty power grid");
  if (!(threshold_db >= 0.0)) throw ConfigError("enumerate_power_settings: P_th must be >= 0");
  for (const auto& [a, b] : adjacency) {
    if (a >= sbs_count || b >= sbs_count || a == b) {
      throw ConfigError("enumerate_power_settings: invalid adjacency pair");
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  ArmSpace space;
  space.sbs_count = sbs_count;
  space.grid_dbm = grid;
  space.adjacency = std::move(adjacency);
  space.power_threshold_db = threshold_db;
  if (sbs_count > 1 && space.adjacency.empty()) {
    space.warnings.push_back("no adjacency given: enumerating the unconstrained product space");
  }

  // Depth-first over SBS index; a pair is checked once both ends are fixed.
  PowerSetting current(sbs_count, 0.0);
  auto extend = [&](auto&& self, std::size_t depth) -> void {
    if (depth == sbs_count) {
      space.arms.push_back(current);
      return;
    }
    for (const double p : space.grid_dbm) {
      current[depth] = p;
      bool ok = true;
      for (const auto& [a, b] : space.adjacency) {
        const std::size_t hi = std::max(a, b);
        if (hi == depth && std::abs(current[a] - current[b]) > threshold_db + 1e-9) {
          ok = false;
          break;
        }
      }
      if (ok) self(self, depth + 1);
    }
  };
  extend(extend, 0);
  return space;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Clustering features: the dBm vector of each arm, optionally augmented with
/// a weighted prior-mean coordinate.
inline std::vector<std::vector<double>> cluster_features(const ArmSpace& space,
                                                         std::span<const double> prior_means = {},
                                                         double prior_weight = 0.0) {
  if (!prior_means.empty() && prior_means.size() != space.size()) {
    throw ConfigError("cluster_features: prior means do not match the arm count");
  }
  std::vector<std::vector<double>> out;
  out.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::vector<double> f = space.arms[i];
    if (!prior_means.empty()) f.push_back(prior_weight * prior_means[i]);
    out.push_back(std::move(f));
  }
  return out;
}

struct KMedoidsResult {
  std::vector<std::size_t> medoids;      // indices into the input set
  std::vector<std::size_t> assignment;   // medoid slot per input item
  double cost = 0.0;                     // sum of distances to assigned medoid
  std::vector<double> cost_history;      // after initialization, then per iteration
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline double assign_to_medoids(const std::vector<std::vector<double>>& dist, const std::vector<std::size_t>& medoids,
                                std::vector<std::size_t>& assignment) {
  const std::size_t n = dist.size();
  assignment.assign(n, 0);
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < medoids.size(); ++m) {
      if (dist[i][medoids[m]] < dist[i][medoids[best]]) best = m;
    }
    // A medoid always owns itself.
    for (std::size_t m = 0; m < medoids.size(); ++m) {
      if (medoids[m] == i) best = m;
    }
    assignment[i] = best;
    cost += dist[i][medoids[best]];
  }
  return cost;
}

}  // namespace detail

/// K-medoids with Park–Jun seeding and alternating medoid update.
///
/// Seeding ranks items by v_j = sum_i d_ij / sum_l d_il and takes the N
/// smallest; exact ties in v_j are broken by a seeded permutation. Each
/// iteration moves every cluster's medoid to the member with the smallest
/// total distance to the cluster, then reassigns; the total cost never
/// increases, and the loop stops when it no longer decreases.
template <class Distance>
KMedoidsResult k_medoids(const std::vector<std::vector<double>>& items, std::size_t clusters, Distance&& distance_fn,
                         std::size_t max_iter, RngStream& rng) {
  const std::size_t n = items.size();
  if (clusters < 1 || clusters > n) {
    throw ConfigError("k_medoids: cluster count " + std::to_string(clusters) + " must lie in [1, " +
                      std::to_string(n) + "]");
  }
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = distance_fn(std::span<const double>(items[i]), std::span<const double>(items[j]));
    }
  }

  std::vector<double> row_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < n; ++l) row_sum[i] += dist[i][l];
  }
  std::vector<double> density(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (row_sum[i] > 0.0) density[j] += dist[i][j] / row_sum[i];
    }
  }
  std::vector<std::uint64_t> tie_key(n);
  for (auto& k : tie_key) k = rng.next_u64();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (density[a] != density[b]) return density[a] < density[b];
    if (tie_key[a] != tie_key[b]) return tie_key[a] < tie_key[b];
    return a < b;
  });

  KMedoidsResult result;
  result.medoids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(clusters));
  result.cost = detail::assign_to_medoids(dist, result.medoids, result.assignment);
  result.cost_history.push_back(result.cost);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<std::size_t> updated = result.medoids;
    for (std::size_t m = 0; m < clusters; ++m) {
      double best_total = std::numeric_limits<double>::infinity();
      for (std::size_t cand = 0; cand < n; ++cand) {
        if (result.assignment[cand] != m) continue;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (result.assignment[i] == m) total += dist[cand][i];
        }
        // Keep the current medoid unless a member is strictly better.
        if (total < best_total - 1e-12 || (cand == result.medoids[m] && total <= best_total + 1e-12)) {
          best_total = total;
          updated[m] = cand;
        }
      }
    }
    std::vector<std::size_t> assignment;
    const double cost = detail::assign_to_medoids(dist, updated, assignment);
    ++result.iterations;
    if (cost > result.cost) {
      // Cannot happen with exact arithmetic; keep the previous solution.
      result.converged = true;
      break;
    }
    const bool improved = cost < result.cost - 1e-12;
    result.medoids = std::move(updated);
    result.assignment = std::move(assignment);
    result.cost = cost;
    result.cost_history.push_back(cost);
    if (!improved) {
      result.converged = true;
      break;
    }
  }
  return result;
}

inline KMedoidsResult k_medoids(const std::vector<std::vector<double>>& items, std::size_t clusters,
                                std::size_t max_iter, RngStream& rng) {
  return k_medoids(items, clusters, euclidean_distance, max_iter, rng);
}

}  // namespace pilotpower
