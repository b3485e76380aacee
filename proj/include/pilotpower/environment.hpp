#pragma once

// Reward environments: the hetnet simulator over an arm space, and synthetic
// per-arm distribution banks for stress tests.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilotpower/arm_space.hpp"
#include "pilotpower/errors.hpp"
#include "pilotpower/hetnet.hpp"
#include "pilotpower/stats.hpp"

namespace pilotpower {

/// Each pull draws a fresh shadowing realization and returns the PIF r.
class HetNetEnvironment {
 public:
  HetNetEnvironment(const Deployment& dep, ArmSpace arms) : evaluator_(dep), arms_(std::move(arms)) {
    for (const auto& a : arms_.arms) {
      if (a.size() != dep.sbs_count()) throw ConfigError("HetNetEnvironment: arm width does not match SBS count");
    }
    if (arms_.arms.empty()) throw ConfigError("HetNetEnvironment: empty arm space");
  }

  [[nodiscard]] std::size_t arm_count() const { return arms_.size(); }
  [[nodiscard]] std::span<const double> powers(std::size_t arm) const { return arms_.powers(arm); }
  [[nodiscard]] const ArmSpace& arms() const { return arms_; }
  [[nodiscard]] const PifEvaluator& evaluator() const { return evaluator_; }

  [[nodiscard]] PifSample sample(std::size_t arm, RngStream& rng) const {
    return evaluator_.evaluate(arms_.powers(arm), rng);
  }
  [[nodiscard]] double pull(std::size_t arm, RngStream& rng) const { return sample(arm, rng).r; }

 private:
  PifEvaluator evaluator_;
  ArmSpace arms_;
};

enum class BankKind { gaussian, uniform, rayleigh };

inline std::string to_string(BankKind k) {
  switch (k) {
    case BankKind::gaussian: return "gaussian";
    case BankKind::uniform: return "uniform";
    case BankKind::rayleigh: return "rayleigh";
  }
  return "gaussian";
}

inline BankKind parse_bank_kind(const std::string& s) {
  if (s == "gaussian") return BankKind::gaussian;
  if (s == "uniform") return BankKind::uniform;
  if (s == "rayleigh") return BankKind::rayleigh;
  throw ConfigError("unknown synthetic distribution '" + s + "' (expected gaussian, uniform or rayleigh)");
}

/// mean / std of any Rayleigh law: sqrt(pi/2) / sqrt(2 - pi/2).
inline const double kRayleighMeanToStd = std::sqrt(std::numbers::pi / 2.0) / std::sqrt(2.0 - std::numbers::pi / 2.0);

/// Arm bank with one fixed distribution per arm.
///
/// Gaussian and uniform banks match both requested moments. Rayleigh is a
/// one-parameter law: the scale b = mean / sqrt(pi/2) matches the mean and
/// the std follows as b sqrt(2 - pi/2); a requested std must agree with it.
class SyntheticBank {
 public:
  SyntheticBank(BankKind kind, std::vector<double> means, std::vector<double> stds,
                std::vector<double> arm_powers_dbm = {})
      : kind_(kind), means_(std::move(means)), stds_(std::move(stds)), powers_(std::move(arm_powers_dbm)) {
    if (means_.empty()) throw ConfigError("SyntheticBank: no arms");
    if (kind_ == BankKind::rayleigh) {
      if (!stds_.empty() && stds_.size() != means_.size()) {
        throw ConfigError("SyntheticBank: std vector length does not match means");
      }
      std::vector<double> implied(means_.size());
      for (std::size_t i = 0; i < means_.size(); ++i) {
        if (!(means_[i] > 0.0)) throw ConfigError("SyntheticBank: rayleigh means must be positive");
        implied[i] = means_[i] / kRayleighMeanToStd;
        if (!stds_.empty() && std::abs(stds_[i] - implied[i]) > 1e-6 * implied[i]) {
          throw ConfigError("SyntheticBank: rayleigh arm " + std::to_string(i) + " cannot have mean " +
                            std::to_string(means_[i]) + " and std " + std::to_string(stds_[i]) +
                            " (implied std " + std::to_string(implied[i]) + ")");
        }
      }
      stds_ = std::move(implied);
    } else {
      if (stds_.size() != means_.size()) throw ConfigError("SyntheticBank: std vector length does not match means");
      for (const double s : stds_) {
        if (!(s >= 0.0)) throw ConfigError("SyntheticBank: stds must be >= 0");
      }
    }
    if (powers_.empty()) {
      for (std::size_t i = 0; i < means_.size(); ++i) powers_.push_back(static_cast<double>(i));
    }
    if (powers_.size() != means_.size()) throw ConfigError("SyntheticBank: power labels do not match arm count");
  }

  [[nodiscard]] BankKind kind() const { return kind_; }
  [[nodiscard]] std::size_t arm_count() const { return means_.size(); }
  [[nodiscard]] const std::vector<double>& means() const { return means_; }
  /// Per-arm std: requested (gaussian, uniform) or implied (rayleigh).
  [[nodiscard]] const std::vector<double>& stds() const { return stds_; }
  [[nodiscard]] std::span<const double> powers(std::size_t arm) const { return {&powers_.at(arm), 1}; }

  [[nodiscard]] double rayleigh_scale(std::size_t arm) const {
    return means_.at(arm) / std::sqrt(std::numbers::pi / 2.0);
  }

  /// Support [mu - sqrt(3) s, mu + sqrt(3) s] of a uniform arm.
  [[nodiscard]] std::pair<double, double> uniform_support(std::size_t arm) const {
    const double h = std::sqrt(3.0) * stds_.at(arm);
    return {means_.at(arm) - h, means_.at(arm) + h};
  }

  [[nodiscard]] double pull(std::size_t arm, RngStream& rng) const {
    switch (kind_) {
      case BankKind::gaussian:
        return sample_gaussian(means_.at(arm), stds_.at(arm), rng);
      case BankKind::uniform: {
        const auto [lo, hi] = uniform_support(arm);
        return lo + (hi - lo) * rng.uniform();
      }
      case BankKind::rayleigh:
        return rayleigh_scale(arm) * std::sqrt(-2.0 * std::log1p(-rng.uniform()));
    }
    return means_.at(arm);
  }

 private:
  BankKind kind_;
  std::vector<double> means_;
  std::vector<double> stds_;
  std::vector<double> powers_;
};

inline SyntheticBank synthetic_bank(BankKind kind, std::vector<double> target_means, std::vector<double> target_stds) {
  return SyntheticBank(kind, std::move(target_means), std::move(target_stds));
}

}  // namespace pilotpower
