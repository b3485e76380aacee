#pragma once

// UiPA, BPA and CBPA: UCL-style bandit policies over a finite arm set.
//
// Every policy exposes the same incremental surface used by the runners:
//   arm_count(), utilities(slot), choose(slot), observe(arm, reward),
//   observe_block(arm, rewards).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pilotpower/errors.hpp"
#include "pilotpower/stats.hpp"

namespace pilotpower {

/// Per-arm pull counts and running reward statistics.
struct ArmStatistics {
  std::vector<std::uint64_t> pulls;
  std::vector<double> mean_reward;
  std::vector<double> sum_sq;

  ArmStatistics() = default;
  explicit ArmStatistics(std::size_t n) : pulls(n, 0), mean_reward(n, 0.0), sum_sq(n, 0.0) {}

  [[nodiscard]] std::size_t size() const { return pulls.size(); }

  void record(std::size_t arm, double reward) {
    const std::span<const double> one(&reward, 1);
    record_block(arm, one);
  }

  /// r_bar <- (N r_bar + sum(rewards)) / (N + n_f), N <- N + n_f.
  void record_block(std::size_t arm, std::span<const double> rewards) {
    check_arm(arm);
    if (rewards.empty()) {
      return;
    }
    double total = 0.0;
    double squares = 0.0;
    for (const double r : rewards) {
      total += r;
      squares += r * r;
    }
    const auto n_old = static_cast<double>(pulls[arm]);
    const auto n_new = n_old + static_cast<double>(rewards.size());
    mean_reward[arm] = (n_old * mean_reward[arm] + total) / n_new;
    sum_sq[arm] += squares;
    pulls[arm] += rewards.size();
  }

  void check_arm(std::size_t arm) const {
    if (arm >= pulls.size()) {
      throw PreconditionError("arm index " + std::to_string(arm) + " out of range");
    }
  }
};

/// Index of the largest utility; ties resolve to the lowest index.
inline std::size_t select_arm(std::span<const double> utilities) {
  if (utilities.empty()) {
    throw PreconditionError("select_arm: empty utility vector");
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (std::isnan(utilities[i])) {
      throw NumericError("select_arm: NaN utility at arm " + std::to_string(i));
    }
    if (utilities[i] > utilities[best]) {
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// UiPA

/// Q_i = r_bar_i + sqrt((S2_i - r_bar_i^2 N_i) / ((N_i - 1) N_i)) * z(t).
inline std::vector<double> uipa_utility(const ArmStatistics& stats, std::uint64_t t) {
  const double z = ucl_quantile(t);
  std::vector<double> q(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto n = stats.pulls[i];
    if (n < 2) {
      throw PreconditionError("uipa_utility: arm " + std::to_string(i) +
                              " has fewer than 2 pulls (forced exploration not finished)");
    }
    const double nd = static_cast<double>(n);
    const double mean = stats.mean_reward[i];
    // Rounding can push a zero sample variance slightly negative.
    const double spread = std::max(0.0, stats.sum_sq[i] - mean * mean * nd);
    q[i] = mean + std::sqrt(spread / ((nd - 1.0) * nd)) * z;
  }
  return q;
}

/// Uninformative policy. Each arm is pulled twice, round robin, before the
/// sample-variance utility is used.
class UipaPolicy {
 public:
  explicit UipaPolicy(std::size_t arm_count) : stats_(arm_count) {
    if (arm_count == 0) {
      throw ConfigError("UipaPolicy: empty arm set");
    }
  }

  [[nodiscard]] std::size_t arm_count() const { return stats_.size(); }
  [[nodiscard]] const ArmStatistics& statistics() const { return stats_; }

  [[nodiscard]] bool exploring() const { return next_forced_arm() < arm_count(); }

  [[nodiscard]] std::vector<double> utilities(std::uint64_t t) const { return uipa_utility(stats_, t); }

  [[nodiscard]] std::size_t choose(std::uint64_t t) const {
    const std::size_t forced = next_forced_arm();
    if (forced < arm_count()) {
      return forced;
    }
    const auto q = utilities(t);
    return select_arm(q);
  }

  void observe(std::size_t arm, double reward) { stats_.record(arm, reward); }
  void observe_block(std::size_t arm, std::span<const double> rewards) { stats_.record_block(arm, rewards); }

 private:
  // Lowest-index arm with the fewest pulls while any arm is below 2.
  [[nodiscard]] std::size_t next_forced_arm() const {
    std::size_t best = arm_count();
    for (std::size_t i = 0; i < arm_count(); ++i) {
      if (stats_.pulls[i] < 2 && (best == arm_count() || stats_.pulls[i] < stats_.pulls[best])) {
        best = i;
      }
    }
    return best;
  }

  ArmStatistics stats_;
};

// ---------------------------------------------------------------------------
// Priors

/// Mean vector plus a single per-arm prior standard deviation. This is all
/// BPA reads from a prior; base_std may be 0 (no uncertainty).
struct IndependentPrior {
  std::vector<double> mean;
  double base_std = 0.0;
};

/// Correlated Gaussian prior N(mu0, Sigma0) with Sigma0_ii = sigma0^2.
class GaussianPrior {
 public:
  GaussianPrior(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double base_std)
      : mean_(std::move(mean)), covariance_(std::move(covariance)), base_std_(base_std) {
    validate();
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
    if (llt.info() != Eigen::Success) {
      throw NumericError("GaussianPrior: covariance is not positive definite");
    }
    precision_ = llt.solve(Eigen::MatrixXd::Identity(size(), size()));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
  }

  static GaussianPrior independent(const std::vector<double>& mean, double base_std) {
    const auto n = static_cast<Eigen::Index>(mean.size());
    Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n) * (base_std * base_std);
    return GaussianPrior(std::move(mu), std::move(cov), base_std);
  }

  [[nodiscard]] Eigen::Index size() const { return mean_.size(); }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& covariance() const { return covariance_; }
  [[nodiscard]] const Eigen::MatrixXd& precision() const { return precision_; }
  [[nodiscard]] double base_std() const { return base_std_; }

  [[nodiscard]] IndependentPrior diagonal_view() const {
    return IndependentPrior{std::vector<double>(mean_.data(), mean_.data() + mean_.size()), base_std_};
  }

 private:
  void validate() const {
    const auto n = mean_.size();
    if (n == 0) {
      throw ConfigError("GaussianPrior: empty mean vector");
    }
    if (covariance_.rows() != n || covariance_.cols() != n) {
      throw ConfigError("GaussianPrior: covariance shape does not match mean");
    }
    if (!(base_std_ > 0.0) || !std::isfinite(base_std_)) {
      throw ConfigError("GaussianPrior: base_std must be positive");
    }
    const double var = base_std_ * base_std_;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(covariance_(i, i) - var) > 1e-12 * var) {
        throw ConfigError("GaussianPrior: covariance diagonal must equal base_std^2");
      }
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (std::abs(covariance_(i, j) - covariance_(j, i)) > 1e-10) {
          throw ConfigError("GaussianPrior: covariance is not symmetric");
        }
      }
    }
  }

  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd precision_;
  double base_std_;
};

// ---------------------------------------------------------------------------
// BPA

/// Posterior of the independent model: mu_hat_i = (mu0_i + N_i r_bar_i) / (N_i + 1),
/// sigma_hat_i = sigma0 / sqrt(N_i + 1).
struct BpaState {
  IndependentPrior prior;
  ArmStatistics stats;
  std::vector<double> mean;
  std::vector<double> std_dev;

  explicit BpaState(IndependentPrior p)
      : prior(std::move(p)), stats(prior.mean.size()), mean(prior.mean), std_dev(prior.mean.size(), prior.base_std) {}

  void refresh(std::size_t arm) {
    const double n = static_cast<double>(stats.pulls[arm]);
    mean[arm] = (prior.mean[arm] + n * stats.mean_reward[arm]) / (n + 1.0);
    std_dev[arm] = prior.base_std / std::sqrt(n + 1.0);
  }
};

inline std::vector<double> bpa_utility(const IndependentPrior& prior, const ArmStatistics& stats,
                                       std::uint64_t t) {
  const double z = ucl_quantile(t);
  std::vector<double> q(prior.mean.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double n = static_cast<double>(stats.pulls[i]);
    const double mu_hat = (prior.mean[i] + n * stats.mean_reward[i]) / (n + 1.0);
    const double sigma_hat = prior.base_std / std::sqrt(n + 1.0);
    q[i] = mu_hat + sigma_hat * z;
  }
  return q;
}

inline void bpa_update(BpaState& state, std::size_t arm, double reward) {
  state.stats.record(arm, reward);
  state.refresh(arm);
}

class BpaPolicy {
 public:
  explicit BpaPolicy(IndependentPrior prior) : state_(std::move(prior)) {
    if (state_.prior.mean.empty()) {
      throw ConfigError("BpaPolicy: empty prior");
    }
  }

  [[nodiscard]] std::size_t arm_count() const { return state_.prior.mean.size(); }
  [[nodiscard]] const BpaState& state() const { return state_; }
  [[nodiscard]] const ArmStatistics& statistics() const { return state_.stats; }

  [[nodiscard]] std::vector<double> utilities(std::uint64_t t) const {
    return bpa_utility(state_.prior, state_.stats, t);
  }
  [[nodiscard]] std::size_t choose(std::uint64_t t) const {
    const auto q = utilities(t);
    return select_arm(q);
  }

  void observe(std::size_t arm, double reward) { bpa_update(state_, arm, reward); }
  void observe_block(std::size_t arm, std::span<const double> rewards) {
    state_.stats.record_block(arm, rewards);
    state_.refresh(arm);
  }

 private:
  BpaState state_;
};

// ---------------------------------------------------------------------------
// CBPA

/// Posterior of the correlated model in information form.
///
/// precision = Lambda0 + diag(N_i / sigma0^2) and
/// information = Lambda0 mu0 + sum_t r_t phi_t / sigma0^2, so that
/// mean = precision^{-1} information and covariance = precision^{-1}.
class PosteriorState {
 public:
  explicit PosteriorState(const GaussianPrior& prior)
      : prior_precision_(prior.precision()),
        prior_mean_(prior.mean()),
        base_var_(prior.base_std() * prior.base_std()),
        stats_(static_cast<std::size_t>(prior.size())),
        precision_(prior.precision()),
        information_(prior.precision() * prior.mean()),
        mean_(prior.mean()),
        covariance_(prior.covariance()) {}

  [[nodiscard]] std::size_t size() const { return stats_.size(); }
  [[nodiscard]] const ArmStatistics& statistics() const { return stats_; }
  [[nodiscard]] const Eigen::MatrixXd& precision() const { return precision_; }
  [[nodiscard]] const Eigen::MatrixXd& prior_precision() const { return prior_precision_; }
  [[nodiscard]] const Eigen::VectorXd& prior_mean() const { return prior_mean_; }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& covariance() const { return covariance_; }
  [[nodiscard]] double base_variance() const { return base_var_; }

  /// Correlation coefficient rho_ij read from the posterior covariance.
  [[nodiscard]] double correlation(std::size_t i, std::size_t j) const {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    return covariance_(a, b) / std::sqrt(covariance_(a, a) * covariance_(b, b));
  }

  /// Accumulate one block of rewards for `arm` without refreshing.
  void accumulate(std::size_t arm, std::span<const double> rewards) {
    stats_.record_block(arm, rewards);
    const auto a = static_cast<Eigen::Index>(arm);
    for (const double r : rewards) {
      information_(a) += r / base_var_;
    }
    precision_(a, a) = prior_precision_(a, a) + static_cast<double>(stats_.pulls[arm]) / base_var_;
  }

  /// Recompute covariance and mean from the precision by Cholesky.
  void refresh() {
    Eigen::LLT<Eigen::MatrixXd> llt(precision_);
    if (llt.info() != Eigen::Success) {
      throw NumericError("PosteriorState: posterior precision lost positive definiteness");
    }
    const auto n = precision_.rows();
    covariance_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
    mean_ = llt.solve(information_);
  }

 private:
  Eigen::MatrixXd prior_precision_;
  Eigen::VectorXd prior_mean_;
  double base_var_;
  ArmStatistics stats_;
  Eigen::MatrixXd precision_;
  Eigen::VectorXd information_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
};

/// Q_i = mu_hat_i + sigma_hat_i sqrt(sum_j rho_ij^2) z(t).
inline std::vector<double> cbpa_utility(const PosteriorState& posterior, std::uint64_t t) {
  const double z = ucl_quantile(t);
  const auto& cov = posterior.covariance();
  const auto n = cov.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(cov(j, j) > 0.0) || !std::isfinite(cov(j, j))) {
      throw NumericError("cbpa_utility: posterior variance of arm " + std::to_string(j) +
                         " is not positive (" + std::to_string(cov(j, j)) + ")");
    }
  }
  std::vector<double> q(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    // sigma_i^2 * sum_j rho_ij^2 = sum_j Sigma_ij^2 / Sigma_jj
    double spread = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      spread += cov(i, j) * cov(i, j) / cov(j, j);
    }
    q[static_cast<std::size_t>(i)] = posterior.mean()(i) + std::sqrt(spread) * z;
  }
  return q;
}

inline void cbpa_update(PosteriorState& posterior, std::size_t arm, double reward) {
  const std::span<const double> one(&reward, 1);
  posterior.accumulate(arm, one);
  posterior.refresh();
}

class CbpaPolicy {
 public:
  explicit CbpaPolicy(const GaussianPrior& prior) : posterior_(prior) {}

  [[nodiscard]] std::size_t arm_count() const { return posterior_.size(); }
  [[nodiscard]] const PosteriorState& posterior() const { return posterior_; }
  [[nodiscard]] const ArmStatistics& statistics() const { return posterior_.statistics(); }

  [[nodiscard]] std::vector<double> utilities(std::uint64_t t) const { return cbpa_utility(posterior_, t); }
  [[nodiscard]] std::size_t choose(std::uint64_t t) const {
    const auto q = utilities(t);
    return select_arm(q);
  }

  void observe(std::size_t arm, double reward) { cbpa_update(posterior_, arm, reward); }
  void observe_block(std::size_t arm, std::span<const double> rewards) {
    posterior_.accumulate(arm, rewards);
    posterior_.refresh();
  }

 private:
  PosteriorState posterior_;
};

}  // namespace pilotpower
