#pragma once

// Closed-form regret upper bounds for UiPA, BPA, CBPA and CBPA with
// switching costs. All logarithms are natural except the explicit log2 T.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pilotpower/errors.hpp"

namespace pilotpower {

namespace detail {

inline const double kLog2PiE = std::log(2.0 * std::numbers::pi * std::numbers::e);
inline const double kSqrt2PiE = std::sqrt(2.0 * std::numbers::pi * std::numbers::e);

inline std::size_t best_index(std::span<const double> means) {
  return static_cast<std::size_t>(std::max_element(means.begin(), means.end()) - means.begin());
}

// ceil(4 sigma0^2 / Delta^2 (log 2 pi e + 4 log T) - 1)
inline double ucl_pull_term(double sigma0, double gap, double horizon) {
  return std::ceil(4.0 * sigma0 * sigma0 / (gap * gap) * (kLog2PiE + 4.0 * std::log(horizon)) - 1.0);
}

}  // namespace detail

/// Inputs shared by the correlated bounds.
struct BoundInputs {
  std::vector<double> true_means;    // mu
  Eigen::VectorXd prior_mean;        // mu0
  Eigen::MatrixXd prior_covariance;  // Sigma0
  double base_std = 1.0;             // sigma0
  std::vector<double> switch_max;    // s~_i^max, empty when no switching cost
};

/// sigma_i-cond^2 = sigma0^2 - sigma_i Sigma_{~i}^{-1} sigma_i^T, where sigma_i is
/// row i of Sigma0 without its diagonal entry and Sigma_{~i} drops row and
/// column i.
inline double cond_variance(const Eigen::MatrixXd& cov, std::size_t i) {
  const auto n = cov.rows();
  const auto ii = static_cast<Eigen::Index>(i);
  if (ii >= n) throw PreconditionError("cond_variance: index out of range");
  if (n == 1) return cov(0, 0);
  Eigen::MatrixXd sub(n - 1, n - 1);
  Eigen::VectorXd row(n - 1);
  for (Eigen::Index a = 0, ra = 0; a < n; ++a) {
    if (a == ii) continue;
    row(ra) = cov(ii, a);
    for (Eigen::Index b = 0, rb = 0; b < n; ++b) {
      if (b == ii) continue;
      sub(ra, rb) = cov(a, b);
      ++rb;
    }
    ++ra;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success) throw NumericError("cond_variance: Sigma_{~i} is not positive definite");
  return cov(ii, ii) - row.dot(llt.solve(row));
}

/// M_i = sigma0^2 sqrt(1 + delta_i^2) sum_j sum_k |lambda0_kj| |mu0_j - mu_j|,
/// delta_i^2 = sigma0^2 / sigma_i-cond^2.
inline double prior_accuracy_M(const Eigen::MatrixXd& cov, const Eigen::VectorXd& prior_mean,
                               std::span<const double> true_means, std::size_t i) {
  const auto n = cov.rows();
  if (prior_mean.size() != n || static_cast<Eigen::Index>(true_means.size()) != n) {
    throw PreconditionError("prior_accuracy_M: dimension mismatch");
  }
  const double sigma0_sq = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  const double delta_sq = sigma0_sq / cond_variance(cov, i);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("prior_accuracy_M: Sigma0 is not positive definite");
  const Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(n, n));
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double err = std::abs(prior_mean(j) - true_means[static_cast<std::size_t>(j)]);
    if (err == 0.0) continue;
    double col = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) col += std::abs(precision(k, j));
    total += col * err;
  }
  return sigma0_sq * std::sqrt(1.0 + delta_sq) * total;
}

/// BPA: sum_i Delta_i (ceil(...) + e^{dm*^2/3s^2} + e^{dm_i^2/3s^2}
///                    + 9/2 e^{3 dm*^2/2s^2} + 9/2 e^{3 dm_i^2/2s^2}).
/// `prior_error` holds Delta m_i = mu_i - mu0_i.
inline double bpa_bound(double horizon, std::span<const double> true_means, double sigma0,
                        std::span<const double> prior_error) {
  if (prior_error.size() != true_means.size()) throw PreconditionError("bpa_bound: dimension mismatch");
  const std::size_t best = detail::best_index(true_means);
  const double s2 = sigma0 * sigma0;
  const double dm_best = prior_error[best];
  double total = 0.0;
  for (std::size_t i = 0; i < true_means.size(); ++i) {
    const double gap = true_means[best] - true_means[i];
    if (gap <= 0.0) continue;
    const double dm = prior_error[i];
    const double constant = std::exp(dm_best * dm_best / (3.0 * s2)) + std::exp(dm * dm / (3.0 * s2)) +
                            4.5 * std::exp(3.0 * dm_best * dm_best / (2.0 * s2)) +
                            4.5 * std::exp(3.0 * dm * dm / (2.0 * s2));
    total += gap * (detail::ucl_pull_term(sigma0, gap, horizon) + constant);
  }
  return total;
}

/// Shared simplification of the BPA and CBPA bounds for an exact prior:
/// sum_i Delta_i (ceil(...) + 4 / sqrt(2 pi e)).
inline double accurate_prior_bound(double horizon, std::span<const double> true_means, double sigma0) {
  const std::size_t best = detail::best_index(true_means);
  double total = 0.0;
  for (std::size_t i = 0; i < true_means.size(); ++i) {
    const double gap = true_means[best] - true_means[i];
    if (gap <= 0.0) continue;
    total += gap * (detail::ucl_pull_term(sigma0, gap, horizon) + 4.0 / detail::kSqrt2PiE);
  }
  return total;
}

/// UiPA: sum_i Delta_i (16 s^2/Delta^2 (log 2 pi e + 4 log T)
///                     + ((2 pi e)^{-1/4} + 2) log T + log(2 pi e)/2 + 2/sqrt(2 pi e)).
inline double uipa_bound(double horizon, std::span<const double> true_means, double sigma0) {
  const std::size_t best = detail::best_index(true_means);
  const double log_t = std::log(horizon);
  double total = 0.0;
  for (std::size_t i = 0; i < true_means.size(); ++i) {
    const double gap = true_means[best] - true_means[i];
    if (gap <= 0.0) continue;
    total += gap * (16.0 * sigma0 * sigma0 / (gap * gap) * (detail::kLog2PiE + 4.0 * log_t) +
                    (std::pow(2.0 * std::numbers::pi * std::numbers::e, -0.25) + 2.0) * log_t +
                    detail::kLog2PiE / 2.0 + 2.0 / detail::kSqrt2PiE);
  }
  return total;
}

/// M_i for every arm.
inline std::vector<double> prior_accuracy_all(const BoundInputs& in) {
  std::vector<double> m(in.true_means.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = prior_accuracy_M(in.prior_covariance, in.prior_mean, in.true_means, i);
  }
  return m;
}

/// CBPA: sum_i Delta_i (ceil(...) + N_hat_i) with
/// N_hat_i = e^{M*^2/3s^2} + e^{M_i^2/3s^2} + 9/2 (e^{3M*^2/2s^2} + e^{3M_i^2/2s^2}).
inline double cbpa_bound(double horizon, const BoundInputs& in) {
  const auto m = prior_accuracy_all(in);
  const std::size_t best = detail::best_index(in.true_means);
  const double s2 = in.base_std * in.base_std;
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double gap = in.true_means[best] - in.true_means[i];
    if (gap <= 0.0) continue;
    const double n_hat = std::exp(m[best] * m[best] / (3.0 * s2)) + std::exp(m[i] * m[i] / (3.0 * s2)) +
                         4.5 * (std::exp(3.0 * m[best] * m[best] / (2.0 * s2)) + std::exp(3.0 * m[i] * m[i] / (2.0 * s2)));
    total += gap * (detail::ucl_pull_term(in.base_std, gap, horizon) + n_hat);
  }
  return total;
}

/// CBPA with switching costs:
///   sum_i Delta_i (C1_i log T + C2_i)
/// + sum_i (s~_i + s~_*) (log 2 C1_i sqrt(log2 T) + (C2_i + log 2 C1_i)(1 + pi^2/6))
/// + s~_*.
inline double cbpa_sc_bound(double horizon, const BoundInputs& in) {
  const auto m = prior_accuracy_all(in);
  const std::size_t n = in.true_means.size();
  const std::size_t best = detail::best_index(in.true_means);
  std::vector<double> smax = in.switch_max;
  if (smax.empty()) smax.assign(n, 0.0);
  if (smax.size() != n) throw PreconditionError("cbpa_sc_bound: switch_max dimension mismatch");
  const double s2 = in.base_std * in.base_std;
  const double log_t = std::log(horizon);
  const double ln2 = std::numbers::ln2;
  double total = smax[best];
  for (std::size_t i = 0; i < n; ++i) {
    const double gap = in.true_means[best] - in.true_means[i];
    if (gap <= 0.0) continue;
    const double c1 = 16.0 * s2 / (gap * gap) +
                      ln2 / 2.0 * (std::exp(3.0 * m[best] * m[best] / (2.0 * s2)) + std::exp(3.0 * m[i] * m[i] / (2.0 * s2)));
    const double c2 = 4.0 * s2 / (gap * gap) * std::log(detail::kSqrt2PiE) +
                      (std::exp(m[best] * m[best] / (3.0 * s2)) + std::exp(m[i] * m[i] / (3.0 * s2)));
    total += gap * (c1 * log_t + c2);
    if (smax[i] + smax[best] == 0.0) continue;
    total += (smax[i] + smax[best]) *
             (ln2 * c1 * std::sqrt(std::log2(horizon)) + (c2 + ln2 * c1) * (1.0 + std::numbers::pi * std::numbers::pi / 6.0));
  }
  return total;
}

/// s~_i^max = max_j s_ij for a deterministic cost over the arm powers.
template <class CostFn>
std::vector<double> switch_maxima(std::size_t arm_count, CostFn&& cost_between) {
  std::vector<double> out(arm_count, 0.0);
  for (std::size_t i = 0; i < arm_count; ++i) {
    for (std::size_t j = 0; j < arm_count; ++j) out[i] = std::max(out[i], cost_between(j, i));
  }
  return out;
}

}  // namespace pilotpower
