#pragma once

// Scalar statistics shared by the policies and the simulator: the standard
// normal CDF and quantile, the UCL quantile schedule, and seeded streams.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "pilotpower/errors.hpp"

namespace pilotpower {

inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

// Acklam's rational approximation, valid on (0, 0.5]; relative error ~1e-9.
inline double acklam_lower(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Standard normal quantile, |Phi(z) - p| <= 1e-9 on (0, 1).
///
/// The upper half is obtained by reflection, so the result is exactly odd
/// whenever 1 - p is representable (always true for p >= 0.5).
inline double std_normal_inv_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("std_normal_inv_cdf: p must lie in (0, 1)");
  }
  if (p > 0.5) {
    return -std_normal_inv_cdf(1.0 - p);
  }
  if (p == 0.5) {
    return 0.0;
  }
  double z = detail::acklam_lower(p);
  // One Newton step on Phi(z) - p.
  const double residual = std_normal_cdf(z) - p;
  z -= residual / std_normal_pdf(z);
  return z;
}

/// Phi^{-1}(1 - 1 / (sqrt(2 pi e) t^2)), the confidence schedule of the UCL
/// utilities.
inline double ucl_quantile(std::uint64_t t) {
  if (t < 1) {
    throw DomainError("ucl_quantile: slot index must be >= 1");
  }
  const double td = static_cast<double>(t);
  const double tail = 1.0 / (std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * td * td);
  // 1 - tail is formed inside the reflection, so evaluate the lower tail directly.
  return -std_normal_inv_cdf(tail);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Seeded random stream identified by (seed, label).
///
/// The label is hashed into the engine seed, so streams derived from one
/// experiment seed with different labels are independent. The engine and the
/// transforms below are fully specified, which keeps sequences identical
/// across standard libraries. Streams are move-only: a copy would silently
/// replay the same draws.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label)
      : seed_(seed),
        label_(label),
        engine_(detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a64(label)))) {}

  RngStream(const RngStream&) = delete;
  RngStream& operator=(const RngStream&) = delete;
  RngStream(RngStream&&) noexcept = default;
  RngStream& operator=(RngStream&&) noexcept = default;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const std::string& label() const { return label_; }

  /// A child stream labelled "<label>/<child>".
  [[nodiscard]] RngStream derive(std::string_view child) const {
    std::string name = label_;
    name += '/';
    name += child;
    return RngStream(seed_, name);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal draw (Marsaglia polar method).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Draw from N(mean, std^2); std == 0 returns mean exactly.
inline double sample_gaussian(double mean, double std, RngStream& rng) {
  if (!(std >= 0.0)) {
    throw DomainError("sample_gaussian: std must be >= 0");
  }
  if (std == 0.0) {
    return mean;
  }
  return mean + std * rng.gaussian();
}

}  // namespace pilotpower
