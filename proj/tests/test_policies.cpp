#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pilotpower/policies.hpp"

namespace pp = pilotpower;

namespace {

pp::ArmStatistics stats_from(const std::vector<std::vector<double>>& rewards) {
  pp::ArmStatistics s(rewards.size());
  for (std::size_t a = 0; a < rewards.size(); ++a) {
    for (const double r : rewards[a]) s.record(a, r);
  }
  return s;
}

Eigen::MatrixXd random_spd(std::size_t n, double sigma0, pp::RngStream& rng) {
  // Exponential kernel on random 1-D points: SPD with unit-scaled diagonal.
  std::vector<double> x(n);
  for (auto& v : x) v = 20.0 * rng.uniform();
  Eigen::MatrixXd cov(n, n);
  const double ell = 1.0 + 9.0 * rng.uniform();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cov(i, j) = sigma0 * sigma0 * std::exp(-std::fabs(x[i] - x[j]) / ell);
  }
  return cov;
}

}  // namespace

TEST(ArmStatistics, EmptyArmsAreZero) {
  pp::ArmStatistics s(3);
  s.record(1, 4.0);
  EXPECT_EQ(s.pulls[0], 0u);
  EXPECT_EQ(s.mean_reward[0], 0.0);
  EXPECT_EQ(s.sum_sq[0], 0.0);
  EXPECT_EQ(s.pulls[1], 1u);
}

TEST(ArmStatistics, BlockEqualsSequentialRecords) {
  pp::ArmStatistics a(2), b(2);
  const std::vector<double> r{1.5, -2.0, 7.25, 3.0};
  for (const double x : r) a.record(0, x);
  b.record_block(0, r);
  EXPECT_EQ(a.pulls[0], b.pulls[0]);
  EXPECT_NEAR(a.mean_reward[0], b.mean_reward[0], 1e-12);
  EXPECT_NEAR(a.sum_sq[0], b.sum_sq[0], 1e-12);
}

TEST(ArmStatistics, SampleVarianceNonNegative) {
  pp::RngStream rng(5, "stats");
  pp::ArmStatistics s(4);
  for (int i = 0; i < 5000; ++i) {
    const auto a = static_cast<std::size_t>(rng.next_u64() % 4);
    s.record(a, 60.0 + rng.gaussian());
    const double n = static_cast<double>(s.pulls[a]);
    ASSERT_GE(s.sum_sq[a], n * s.mean_reward[a] * s.mean_reward[a] - 1e-9 * std::max(1.0, s.sum_sq[a]));
  }
}

TEST(ArmStatistics, RejectsBadArm) {
  pp::ArmStatistics s(2);
  EXPECT_THROW(s.record(2, 1.0), pp::PreconditionError);
}

TEST(SelectArm, ArgmaxWithLowestIndexTies) {
  EXPECT_EQ(pp::select_arm(std::vector<double>{1, 3, 2}), 1u);
  EXPECT_EQ(pp::select_arm(std::vector<double>{5, 5, 1}), 0u);
  EXPECT_EQ(pp::select_arm(std::vector<double>{-2, -1, -3}), 1u);
}

TEST(SelectArm, NanAndEmptyAreErrors) {
  EXPECT_THROW(pp::select_arm(std::vector<double>{1, std::nan(""), 2}), pp::NumericError);
  EXPECT_THROW(pp::select_arm(std::vector<double>{}), pp::PreconditionError);
}

TEST(UipaUtility, HandComputedCases) {
  const double z1 = oracle::normal_quantile(1.0 - 1.0 / std::sqrt(2.0 * M_PI * M_E));
  auto s = stats_from({{10, 10}, {8, 12}, {0, 0, 0, 0}});
  const auto q1 = pp::uipa_utility(s, 1);
  EXPECT_NEAR(q1[0], 10.0, 1e-12);
  EXPECT_NEAR(q1[1], 10.0 + 2.0 * z1, 1e-9);
  EXPECT_NEAR(q1[1], 11.40, 5e-3);
  EXPECT_NEAR(pp::uipa_utility(s, 10)[2], 0.0, 1e-12);
}

TEST(UipaUtility, ExplorationTermMatchesSampleStd) {
  const std::vector<double> r{3.0, 9.5, 4.25, 7.0, 1.0};
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / r.size();
  double ss = 0.0;
  for (const double x : r) ss += (x - mean) * (x - mean);
  const double sample_std = std::sqrt(ss / (r.size() - 1));
  auto s = stats_from({r});
  const double z = pp::ucl_quantile(7);
  EXPECT_NEAR(pp::uipa_utility(s, 7)[0], mean + sample_std / std::sqrt(5.0) * z, 1e-9);
}

TEST(UipaUtility, ShiftInvariantExploration) {
  const std::vector<double> r{3.0, 9.5, 4.25, 7.0};
  std::vector<double> shifted;
  for (const double x : r) shifted.push_back(x + 1000.0);
  const auto a = stats_from({r});
  const auto b = stats_from({shifted});
  EXPECT_NEAR(pp::uipa_utility(b, 5)[0] - 1000.0 - b.mean_reward[0] + 1000.0,
              pp::uipa_utility(a, 5)[0] - a.mean_reward[0], 1e-9);
}

TEST(UipaUtility, RequiresTwoPulls) {
  auto s = stats_from({{1, 2}, {3}});
  EXPECT_THROW(pp::uipa_utility(s, 3), pp::PreconditionError);
}

TEST(UipaPolicy, RoundRobinTwicePerArm) {
  pp::UipaPolicy p(3);
  std::vector<std::size_t> seq;
  for (std::uint64_t t = 1; t <= 6; ++t) {
    EXPECT_TRUE(p.exploring());
    const auto a = p.choose(t);
    seq.push_back(a);
    p.observe(a, static_cast<double>(a));
  }
  EXPECT_EQ(seq, (std::vector<std::size_t>{0, 1, 2, 0, 1, 2}));
  EXPECT_FALSE(p.exploring());
  EXPECT_EQ(p.choose(7), 2u);
}

TEST(BpaUtility, HandComputedCases) {
  const double z1 = pp::ucl_quantile(1);
  pp::ArmStatistics empty(1);
  EXPECT_NEAR(pp::bpa_utility({{50.0}, 4.0}, empty, 1)[0], 50.0 + 4.0 * z1, 1e-12);
  EXPECT_NEAR(pp::bpa_utility({{50.0}, 4.0}, empty, 1)[0], 52.80, 5e-3);
  auto s = stats_from({{10, 10, 10}});
  EXPECT_NEAR(pp::bpa_utility({{0.0}, 2.0}, s, 1)[0], 7.5 + 1.0 * z1, 1e-12);
  EXPECT_NEAR(pp::bpa_utility({{0.0}, 2.0}, s, 1)[0], 8.20, 5e-3);
}

TEST(BpaUtility, ZeroPriorStdGivesPosteriorMean) {
  auto s = stats_from({{4, 6}, {}});
  for (const std::uint64_t t : {1ull, 10ull, 1000ull}) {
    const auto q = pp::bpa_utility({{1.0, 3.0}, 0.0}, s, t);
    EXPECT_NEAR(q[0], (1.0 + 10.0) / 3.0, 1e-12);
    EXPECT_NEAR(q[1], 3.0, 1e-12);
  }
}

TEST(BpaUpdate, StatedExamples) {
  pp::BpaState st(pp::IndependentPrior{{50.0, 10.0}, 3.0});
  pp::bpa_update(st, 0, 60.0);
  EXPECT_NEAR(st.mean[0], 55.0, 1e-12);
  EXPECT_NEAR(st.std_dev[0], 3.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(st.mean[1], 10.0);
  pp::bpa_update(st, 0, 40.0);
  EXPECT_NEAR(st.mean[0], 50.0, 1e-12);
}

TEST(BpaUpdate, ConvergesToConstantReward) {
  pp::BpaState st(pp::IndependentPrior{{0.0}, 1.0});
  for (int i = 0; i < 1000000; ++i) pp::bpa_update(st, 0, 7.0);
  EXPECT_NEAR(st.mean[0], 7.0, 1e-4);
}

TEST(BpaUpdate, ConcentrationWithMatchingPrior) {
  pp::BpaState st(pp::IndependentPrior{{4.0}, 2.0});
  for (int m = 1; m <= 50; ++m) {
    pp::bpa_update(st, 0, 4.0);
    EXPECT_NEAR(st.mean[0], 4.0, 1e-12);
    EXPECT_NEAR(st.std_dev[0], 2.0 / std::sqrt(m + 1.0), 1e-12);
  }
}

TEST(GaussianPrior, Validation) {
  Eigen::VectorXd mu(2);
  mu << 1, 2;
  Eigen::MatrixXd cov(2, 2);
  cov << 4, 1, 1, 4;
  EXPECT_NO_THROW(pp::GaussianPrior(mu, cov, 2.0));
  Eigen::MatrixXd wrong_diag = cov;
  wrong_diag(1, 1) = 5;
  EXPECT_THROW(pp::GaussianPrior(mu, wrong_diag, 2.0), pp::ConfigError);
  Eigen::MatrixXd asym = cov;
  asym(0, 1) = 1.5;
  EXPECT_THROW(pp::GaussianPrior(mu, asym, 2.0), pp::ConfigError);
  Eigen::MatrixXd singular(2, 2);
  singular << 4, 4, 4, 4;
  EXPECT_THROW(pp::GaussianPrior(mu, singular, 2.0), pp::NumericError);
  EXPECT_THROW(pp::GaussianPrior(mu, cov, 0.0), pp::ConfigError);
}

TEST(CbpaUtility, DiagonalPosteriorMatchesBpa) {
  const std::vector<double> mu{1.0, 5.0, 3.0};
  const auto prior = pp::GaussianPrior::independent(mu, 2.0);
  pp::CbpaPolicy cbpa(prior);
  pp::BpaPolicy bpa(prior.diagonal_view());
  for (const auto& [a, r] : std::vector<std::pair<std::size_t, double>>{{0, 2.0}, {1, 4.5}, {1, 6.0}, {2, 1.0}}) {
    cbpa.observe(a, r);
    bpa.observe(a, r);
  }
  const auto qc = cbpa.utilities(9);
  const auto qb = bpa.utilities(9);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(qc[i], qb[i], 1e-9);
}

TEST(CbpaUtility, CorrelationFactor) {
  for (const auto& [rho, factor] : std::vector<std::pair<double, double>>{{0.8, 1.2806}, {0.999, 1.4135}}) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, rho, rho, 1.0;
    pp::PosteriorState post(pp::GaussianPrior(mu, cov, 1.0));
    const double z = pp::ucl_quantile(4);
    EXPECT_NEAR(pp::cbpa_utility(post, 4)[0] / z, std::sqrt(1.0 + rho * rho), 1e-9);
    EXPECT_NEAR(std::sqrt(1.0 + rho * rho), factor, 1e-4);
  }
}

TEST(CbpaUpdate, NoDataPosteriorIsPrior) {
  pp::RngStream rng(1, "cov");
  const Eigen::MatrixXd cov = random_spd(5, 1.5, rng);
  Eigen::VectorXd mu(5);
  mu << 1, 2, 3, 4, 5;
  pp::PosteriorState post(pp::GaussianPrior(mu, cov, 1.5));
  EXPECT_LT((post.mean() - mu).norm(), 1e-12);
  EXPECT_LT((post.covariance() - cov).norm(), 1e-12);
}

TEST(CbpaUpdate, DiagonalPriorReducesToIndependentUpdate) {
  pp::RngStream rng(2, "tape");
  std::vector<double> mu0{3.0, -1.0, 8.0, 0.5};
  pp::PosteriorState post(pp::GaussianPrior::independent(mu0, 1.7));
  pp::ArmStatistics s(4);
  for (int k = 0; k < 200; ++k) {
    const auto a = static_cast<std::size_t>(rng.next_u64() % 4);
    const double r = 10.0 * rng.gaussian();
    pp::cbpa_update(post, a, r);
    s.record(a, r);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double n = static_cast<double>(s.pulls[i]);
    EXPECT_NEAR(post.mean()(static_cast<Eigen::Index>(i)), (mu0[i] + n * s.mean_reward[i]) / (1.0 + n), 1e-10);
  }
}

TEST(CbpaUpdate, PrecisionMinusPriorIsDiagonalCounts) {
  pp::RngStream rng(3, "prec");
  const double sigma0 = 2.5;
  const Eigen::MatrixXd cov = random_spd(6, sigma0, rng);
  pp::PosteriorState post(pp::GaussianPrior(Eigen::VectorXd::Zero(6), cov, sigma0));
  for (int k = 0; k < 80; ++k) pp::cbpa_update(post, rng.next_u64() % 6, rng.gaussian());
  const Eigen::MatrixXd diff = post.precision() - post.prior_precision();
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double expected =
          i == j ? static_cast<double>(post.statistics().pulls[static_cast<std::size_t>(i)]) / (sigma0 * sigma0) : 0.0;
      EXPECT_NEAR(diff(i, j), expected, 1e-9);
    }
  }
}

TEST(CbpaUpdate, RecursiveMatchesClosedFormOnRandomTapes) {
  pp::RngStream rng(4, "closed-form");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 9;
    const double sigma0 = 0.5 + 3.0 * rng.uniform();
    const Eigen::MatrixXd cov = random_spd(n, sigma0, rng);
    Eigen::VectorXd mu(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = 50.0 + 10.0 * rng.gaussian();
    pp::PosteriorState post(pp::GaussianPrior(mu, cov, sigma0));
    for (int step = 0; step < 50; ++step) {
      pp::cbpa_update(post, rng.next_u64() % n, 50.0 + 5.0 * rng.gaussian());
    }
    std::vector<double> counts, means;
    for (std::size_t i = 0; i < n; ++i) {
      counts.push_back(static_cast<double>(post.statistics().pulls[i]));
      means.push_back(post.statistics().mean_reward[i]);
    }
    const auto ref = oracle::closed_form_posterior(cov, mu, counts, means, sigma0);
    ASSERT_LT((post.precision() - ref.precision).cwiseAbs().maxCoeff(), 1e-8 * ref.precision.cwiseAbs().maxCoeff());
    ASSERT_LT((post.mean() - ref.mean).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(CbpaUpdate, PosteriorVariancesShrinkWithPulls) {
  pp::RngStream rng(5, "shrink");
  const Eigen::MatrixXd cov = random_spd(5, 2.0, rng);
  pp::PosteriorState post(pp::GaussianPrior(Eigen::VectorXd::Zero(5), cov, 2.0));
  Eigen::VectorXd prev = post.covariance().diagonal();
  for (int k = 0; k < 40; ++k) {
    pp::cbpa_update(post, rng.next_u64() % 5, rng.gaussian());
    const Eigen::VectorXd cur = post.covariance().diagonal();
    for (Eigen::Index i = 0; i < 5; ++i) {
      ASSERT_GT(cur(i), 0.0);
      ASSERT_LE(cur(i), prev(i) + 1e-12);
    }
    prev = cur;
  }
}

TEST(CbpaPolicy, BlockObservationEqualsSequential) {
  pp::RngStream rng(6, "block");
  const Eigen::MatrixXd cov = random_spd(4, 1.0, rng);
  const pp::GaussianPrior prior(Eigen::VectorXd::Zero(4), cov, 1.0);
  pp::CbpaPolicy a(prior), b(prior);
  const std::vector<double> block{0.3, -1.2, 2.2};
  a.observe_block(2, block);
  for (const double r : block) b.observe(2, r);
  EXPECT_LT((a.posterior().mean() - b.posterior().mean()).norm(), 1e-12);
  EXPECT_LT((a.posterior().covariance() - b.posterior().covariance()).norm(), 1e-12);
}
