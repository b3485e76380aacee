#pragma once

// Frame/block partition of the horizon and the runners that drive a policy
// against an environment, with or without block allocation.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilotpower/errors.hpp"
#include "pilotpower/stats.hpp"

namespace pilotpower {

struct Frame {
  std::size_t index = 0;           // f, 1-based
  std::uint64_t end_slot = 0;      // L_f (truncated at T for the last frame)
  std::uint64_t block_count = 0;   // realized blocks in this frame
  std::uint64_t nominal_blocks = 0;  // b_f from the frame law
};

struct Block {
  std::size_t frame = 0;        // f
  std::uint64_t index = 0;      // k, 1-based within the frame
  std::uint64_t start_slot = 0;  // tau_fk, 1-based
  std::uint64_t length = 0;     // f, or less for the truncated final block

  [[nodiscard]] std::uint64_t last_slot() const { return start_slot + length - 1; }
};

struct BlockSchedule {
  std::uint64_t horizon = 0;
  std::vector<Frame> frames;
  std::vector<Block> blocks;

  [[nodiscard]] std::size_t frame_count() const { return frames.size(); }
  [[nodiscard]] std::size_t block_count() const { return blocks.size(); }
};

namespace detail {

inline std::uint64_t saturating_pow2(std::uint64_t exponent) {
  return exponent >= 63 ? std::numeric_limits<std::uint64_t>::max() : (std::uint64_t{1} << exponent);
}

}  // namespace detail

/// Number of frames l = ceil(sqrt(log2 T)), at least 1.
inline std::size_t frame_count_for(std::uint64_t horizon) {
  if (horizon <= 1) {
    return 1;
  }
  const double root = std::sqrt(std::log2(static_cast<double>(horizon)));
  auto l = static_cast<std::size_t>(std::ceil(root));
  // Guard the ceil against log2 rounding at exact powers of two.
  while (l > 1 && static_cast<double>((l - 1) * (l - 1)) >= std::log2(static_cast<double>(horizon))) {
    --l;
  }
  return std::max<std::size_t>(l, 1);
}

/// b_f = ceil((2^{f^2} - 2^{(f-1)^2}) / f).
inline std::uint64_t nominal_block_count(std::size_t f) {
  const auto hi = detail::saturating_pow2(f * f);
  const auto lo = detail::saturating_pow2((f - 1) * (f - 1));
  const auto diff = hi - lo;
  return diff / f + (diff % f != 0 ? 1 : 0);
}

/// Frames of blocks over slots 1..T: frame f holds b_f blocks of f slots
/// starting at tau_fk = L_{f-1} + 1 + f (k - 1). The last frame is cut at T
/// and, when the frame law alone falls short of T, extended with blocks of
/// length l until T is covered.
inline BlockSchedule build_block_schedule(std::uint64_t horizon) {
  if (horizon < 1) {
    throw ConfigError("build_block_schedule: horizon must be >= 1");
  }
  BlockSchedule schedule;
  schedule.horizon = horizon;
  const std::size_t l = frame_count_for(horizon);

  std::uint64_t frame_start = 1;  // L_{f-1} + 1
  for (std::size_t f = 1; f <= l && frame_start <= horizon; ++f) {
    Frame frame;
    frame.index = f;
    frame.nominal_blocks = nominal_block_count(f);
    const std::uint64_t remaining = horizon - frame_start + 1;
    const std::uint64_t needed = remaining / f + (remaining % f != 0 ? 1 : 0);
    const std::uint64_t blocks = (f == l) ? needed : std::min(frame.nominal_blocks, needed);
    for (std::uint64_t k = 1; k <= blocks; ++k) {
      Block block;
      block.frame = f;
      block.index = k;
      block.start_slot = frame_start + f * (k - 1);
      block.length = std::min<std::uint64_t>(f, horizon - block.start_slot + 1);
      schedule.blocks.push_back(block);
    }
    frame.block_count = blocks;
    frame.end_slot = schedule.blocks.back().last_slot();
    schedule.frames.push_back(frame);
    frame_start = frame.end_slot + 1;
  }
  return schedule;
}

/// s_ij = f(|p_i - p_j|) with f(0) = 0, non-decreasing and bounded.
class SwitchingCostFn {
 public:
  enum class Kind { linear, table };

  SwitchingCostFn() = default;

  static SwitchingCostFn linear(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw ConfigError("SwitchingCostFn: gamma must be a finite value >= 0");
    }
    SwitchingCostFn fn;
    fn.kind_ = Kind::linear;
    fn.gamma_ = gamma;
    return fn;
  }

  /// Piecewise-linear in |dp| through (delta, cost) knots, constant past the
  /// last knot. Knots must start at (0, 0) and be non-decreasing.
  static SwitchingCostFn table(std::vector<std::pair<double, double>> knots) {
    if (knots.empty() || knots.front().first != 0.0 || knots.front().second != 0.0) {
      throw ConfigError("SwitchingCostFn: table must start at (0, 0)");
    }
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i].first > knots[i - 1].first) || knots[i].second < knots[i - 1].second ||
          !std::isfinite(knots[i].second)) {
        throw ConfigError("SwitchingCostFn: table must be increasing in delta and non-decreasing in cost");
      }
    }
    SwitchingCostFn fn;
    fn.kind_ = Kind::table;
    fn.knots_ = std::move(knots);
    return fn;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] bool vanishes() const {
    if (kind_ == Kind::linear) {
      return gamma_ == 0.0;
    }
    return knots_.back().second == 0.0;
  }

  /// Cost for an absolute power difference in dB.
  [[nodiscard]] double operator()(double delta_db) const {
    const double d = std::abs(delta_db);
    if (kind_ == Kind::linear) {
      return gamma_ * d;
    }
    if (d >= knots_.back().first) {
      return knots_.back().second;
    }
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), d,
                                     [](double v, const auto& knot) { return v < knot.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (d - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
  }

 private:
  Kind kind_ = Kind::linear;
  double gamma_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
};

inline double switching_cost(double p_from_dbm, double p_to_dbm, const SwitchingCostFn& fn) {
  return fn(p_to_dbm - p_from_dbm);
}

/// Multi-SBS cost: the sum of per-SBS costs.
inline double switching_cost(std::span<const double> from_dbm, std::span<const double> to_dbm,
                             const SwitchingCostFn& fn) {
  if (from_dbm.size() != to_dbm.size()) {
    throw PreconditionError("switching_cost: power settings differ in SBS count");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < from_dbm.size(); ++k) {
    total += fn(to_dbm[k] - from_dbm[k]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Runners

/// Per-slot record of one seeded run.
struct RunTrace {
  std::vector<std::size_t> arms;
  std::vector<double> rewards;          // raw observed reward r_a(t)
  std::vector<double> switch_charges;   // s_{a(t) a(t-1)}, 0 when no change

  [[nodiscard]] std::size_t horizon() const { return arms.size(); }

  /// G_T, the sum of raw rewards.
  [[nodiscard]] double cumulative_reward() const {
    double g = 0.0;
    for (const double r : rewards) g += r;
    return g;
  }
  [[nodiscard]] double switching_total() const {
    double s = 0.0;
    for (const double c : switch_charges) s += c;
    return s;
  }
  /// G_T^S = G_T - SC(T).
  [[nodiscard]] double net_reward() const { return cumulative_reward() - switching_total(); }

  [[nodiscard]] std::size_t switch_count() const {
    std::size_t count = 0;
    for (std::size_t t = 1; t < arms.size(); ++t) {
      if (arms[t] != arms[t - 1]) ++count;
    }
    return count;
  }

  /// Most frequent arm over the last `window` slots (ties to the lowest index).
  [[nodiscard]] std::size_t modal_arm(std::size_t window, std::size_t arm_count) const {
    if (arms.empty()) {
      throw PreconditionError("RunTrace::modal_arm: empty trace");
    }
    window = std::clamp<std::size_t>(window, 1, arms.size());
    std::vector<std::size_t> counts(arm_count, 0);
    for (std::size_t t = arms.size() - window; t < arms.size(); ++t) {
      ++counts.at(arms[t]);
    }
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
};

template <class P>
concept BanditPolicy = requires(P p, const P cp, std::uint64_t slot, std::size_t arm, double reward,
                                std::span<const double> rewards) {
  { cp.arm_count() } -> std::convertible_to<std::size_t>;
  { cp.choose(slot) } -> std::convertible_to<std::size_t>;
  p.observe(arm, reward);
  p.observe_block(arm, rewards);
};

template <class E>
concept RewardEnvironment = requires(const E ce, std::size_t arm, RngStream& rng) {
  { ce.arm_count() } -> std::convertible_to<std::size_t>;
  { ce.pull(arm, rng) } -> std::convertible_to<double>;
  { ce.powers(arm) } -> std::convertible_to<std::span<const double>>;
};

namespace detail {

template <class P, class E>
void check_pairing(const P& policy, const E& env) {
  if (policy.arm_count() != env.arm_count()) {
    throw ConfigError("policy has " + std::to_string(policy.arm_count()) + " arms but environment has " +
                      std::to_string(env.arm_count()));
  }
}

}  // namespace detail

/// One decision per slot. Switching charges are accounted in the trace but
/// the policy observes the raw reward.
template <BanditPolicy P, RewardEnvironment E>
RunTrace run_per_slot(P& policy, const E& env, std::uint64_t horizon, const SwitchingCostFn& cost,
                      RngStream& rng) {
  detail::check_pairing(policy, env);
  RunTrace trace;
  trace.arms.reserve(horizon);
  trace.rewards.reserve(horizon);
  trace.switch_charges.reserve(horizon);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const std::size_t arm = policy.choose(t);
    const double reward = env.pull(arm, rng);
    double charge = 0.0;
    if (!trace.arms.empty() && trace.arms.back() != arm) {
      charge = switching_cost(env.powers(trace.arms.back()), env.powers(arm), cost);
    }
    policy.observe(arm, reward);
    trace.arms.push_back(arm);
    trace.rewards.push_back(reward);
    trace.switch_charges.push_back(charge);
  }
  return trace;
}

/// Block allocation: one decision per block at its first slot, the arm held
/// for the whole block. When the arm changes, the switching charge is
/// subtracted from the reward the policy records for the block's first slot;
/// all block rewards are then folded in with a single state refresh.
template <BanditPolicy P, RewardEnvironment E>
RunTrace run_with_switching(P& policy, const E& env, const BlockSchedule& schedule, const SwitchingCostFn& cost,
                            RngStream& rng, std::uint64_t horizon) {
  detail::check_pairing(policy, env);
  if (schedule.horizon != horizon || schedule.blocks.empty() ||
      schedule.blocks.back().last_slot() != horizon) {
    throw ConfigError("run_with_switching: schedule covers " + std::to_string(schedule.horizon) +
                      " slots but the run horizon is " + std::to_string(horizon));
  }
  RunTrace trace;
  trace.arms.reserve(horizon);
  trace.rewards.reserve(horizon);
  trace.switch_charges.reserve(horizon);
  std::vector<double> recorded;
  for (const Block& block : schedule.blocks) {
    const std::size_t arm = policy.choose(block.start_slot);
    recorded.clear();
    for (std::uint64_t s = 0; s < block.length; ++s) {
      const double reward = env.pull(arm, rng);
      double charge = 0.0;
      if (s == 0 && !trace.arms.empty() && trace.arms.back() != arm) {
        charge = switching_cost(env.powers(trace.arms.back()), env.powers(arm), cost);
      }
      trace.arms.push_back(arm);
      trace.rewards.push_back(reward);
      trace.switch_charges.push_back(charge);
      recorded.push_back(reward - charge);
    }
    policy.observe_block(arm, recorded);
  }
  return trace;
}

}  // namespace pilotpower
