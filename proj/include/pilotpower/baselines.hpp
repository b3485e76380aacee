#pragma once

// Comparison policies: the dwell-and-step industry heuristic and a fixed arm.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pilotpower/errors.hpp"
#include "pilotpower/policies.hpp"

namespace pilotpower {

enum class StepDirection { up, down };

/// Heuristic on a sorted 1-D power grid. It dwells on a power for D slots,
/// compares the dwell-average PIF with the previous dwell, keeps its
/// direction if the average improved (strictly) and reverses otherwise, then
/// moves one step, clamped to the grid.
struct HeuristicState {
  std::vector<double> grid_dbm;
  std::size_t index = 0;  // current grid position
  std::uint64_t dwell_length = 30;
  std::size_t step_points = 1;  // step size in grid points
  StepDirection direction = StepDirection::up;
  std::uint64_t dwell_counter = 0;
  double dwell_sum = 0.0;
  bool has_previous = false;
  double previous_average = 0.0;
  std::uint64_t moves = 0;  // completed dwells that triggered a step decision

  [[nodiscard]] double power_dbm() const { return grid_dbm.at(index); }
};

/// Start at the grid point nearest the middle of the power range (lower on a
/// tie), heading up. step_db must be a multiple of the grid spacing.
inline HeuristicState make_heuristic_state(std::vector<double> grid_dbm, std::uint64_t dwell_length = 30,
                                           double step_db = 2.0) {
  if (grid_dbm.empty()) throw ConfigError("heuristic: empty power grid");
  if (dwell_length < 1) throw ConfigError("heuristic: dwell length must be >= 1");
  HeuristicState s;
  s.grid_dbm = std::move(grid_dbm);
  for (std::size_t i = 1; i < s.grid_dbm.size(); ++i) {
    if (!(s.grid_dbm[i] > s.grid_dbm[i - 1])) throw ConfigError("heuristic: grid must be strictly increasing");
  }
  s.dwell_length = dwell_length;
  if (s.grid_dbm.size() > 1) {
    const double spacing = s.grid_dbm[1] - s.grid_dbm[0];
    const double ratio = step_db / spacing;
    if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw ConfigError("heuristic: step " + std::to_string(step_db) + " dB is not a multiple of the grid spacing");
    }
    s.step_points = static_cast<std::size_t>(std::round(ratio));
  }
  const double mid = 0.5 * (s.grid_dbm.front() + s.grid_dbm.back());
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.grid_dbm.size(); ++i) {
    if (std::abs(s.grid_dbm[i] - mid) < std::abs(s.grid_dbm[best] - mid) - 1e-12) best = i;
  }
  s.index = best;
  return s;
}

/// Feed one slot's PIF; returns the power for the next slot.
inline double heuristic_step(HeuristicState& s, double reward) {
  s.dwell_sum += reward;
  ++s.dwell_counter;
  if (s.dwell_counter < s.dwell_length) return s.power_dbm();

  const double average = s.dwell_sum / static_cast<double>(s.dwell_counter);
  if (s.has_previous && !(average > s.previous_average)) {
    s.direction = (s.direction == StepDirection::up) ? StepDirection::down : StepDirection::up;
  }
  s.has_previous = true;
  s.previous_average = average;
  s.dwell_sum = 0.0;
  s.dwell_counter = 0;
  ++s.moves;

  const std::size_t last = s.grid_dbm.size() - 1;
  if (s.direction == StepDirection::up) {
    s.index = std::min(last, s.index + s.step_points);
  } else {
    s.index = s.index >= s.step_points ? s.index - s.step_points : 0;
  }
  return s.power_dbm();
}

/// Policy wrapper over the heuristic; arm index == grid index.
class HeuristicPolicy {
 public:
  explicit HeuristicPolicy(HeuristicState state) : state_(std::move(state)) {}

  [[nodiscard]] std::size_t arm_count() const { return state_.grid_dbm.size(); }
  [[nodiscard]] const HeuristicState& state() const { return state_; }
  [[nodiscard]] std::size_t choose(std::uint64_t /*slot*/) const { return state_.index; }

  void observe(std::size_t arm, double reward) {
    if (arm != state_.index) throw PreconditionError("HeuristicPolicy: observed an arm it did not choose");
    heuristic_step(state_, reward);
  }
  void observe_block(std::size_t arm, std::span<const double> rewards) {
    for (const double r : rewards) observe(arm, r);
  }

 private:
  HeuristicState state_;
};

/// Always plays one arm; no learning.
class FixedPolicy {
 public:
  FixedPolicy(std::size_t arm_count, std::size_t arm) : arm_count_(arm_count), arm_(arm) {
    if (arm >= arm_count) throw ConfigError("FixedPolicy: arm index out of range");
  }

  [[nodiscard]] std::size_t arm_count() const { return arm_count_; }
  [[nodiscard]] std::size_t choose(std::uint64_t /*slot*/) const { return arm_; }
  void observe(std::size_t /*arm*/, double /*reward*/) {}
  void observe_block(std::size_t /*arm*/, std::span<const double> /*rewards*/) {}

 private:
  std::size_t arm_count_;
  std::size_t arm_;
};

}  // namespace pilotpower
