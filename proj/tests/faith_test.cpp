#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "faith/faith.hpp"
#include "faith/stats.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace faith;
namespace ft = faith::testing;

TEST(FaithStatistic, MatchesLpValue) {
  EXPECT_EQ(faith_statistic(ft::two_point(0.0), EmpiricalDistribution::from_counts({5, 5})), 0.0);
  EXPECT_NEAR(faith_statistic(ft::two_point(0.2), EmpiricalDistribution::from_counts({5, 5})), 0.2, 1e-12);
}

TEST(MultinomialCovariance, ClosedForms) {
  auto s = multinomial_covariance({1.0, 0.0}).sigma;
  EXPECT_EQ(s, Eigen::Matrix2d::Zero());
  s = multinomial_covariance({0.5, 0.5}).sigma;
  EXPECT_TRUE(s.isApprox((Eigen::Matrix2d() << 0.25, -0.25, -0.25, 0.25).finished()));
}

TEST(MultinomialCovariance, RandomProbabilityVectors) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    int K = 2 + rep % 7;
    std::vector<double> p(K);
    double total = 0.0;
    for (double& v : p) total += (v = u(rng));
    for (double& v : p) v /= total;
    auto s = multinomial_covariance(p).sigma;
    EXPECT_EQ(s, s.transpose());
    EXPECT_LE(s.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((s * Eigen::VectorXd::Ones(K)).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    for (int i = 0; i < K; ++i) EXPECT_NEAR(s(i, i), p[i] * (1 - p[i]), 1e-15);
  }
}

TEST(SampleAsymptotic, UniqueDualGivesGaussian) {
  auto p = ft::smooth_three_point();
  auto sample = sample_asymptotic(p, ft::kSmoothStar, 100000, 7);
  auto m = stats::moments(sample.values);
  EXPECT_NEAR(m.skewness, 0.0, 0.1);
  EXPECT_NEAR(m.mean, 0.0, 0.003);
  // 0.35 Z_3 with Var Z_3 = 0.4 * 0.6
  EXPECT_NEAR(m.variance, 0.35 * 0.35 * 0.24, 0.002);
}

TEST(SampleAsymptotic, SegmentFaceHasAtomAtZero) {
  auto p = ft::two_point(0.5);
  auto sample = sample_asymptotic(p, ft::kHalfHalf, 20000, 8);
  auto zeros = std::count(sample.values.begin(), sample.values.end(), 0.0);
  EXPECT_NEAR(static_cast<double>(zeros) / sample.values.size(), 0.5, 0.02);
  for (double v : sample.values) EXPECT_LE(v, 0.0);
}

TEST(SampleAsymptotic, SeededAndThreadIndependent) {
  auto p = ft::kinked_three_point();
  auto a = sample_asymptotic(p, ft::kKinkedStar, 500, 99, 1);
  auto b = sample_asymptotic(p, ft::kKinkedStar, 500, 99, 3);
  auto c = sample_asymptotic(p, ft::kKinkedStar, 500, 100, 1);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_THROW(sample_asymptotic(p, ft::kKinkedStar, 0, 1), ConfigError);
}

TEST(RobustnessGap, IdenticalProblems) {
  auto p = ft::kinked_three_point();
  auto r = robustness_gap(p, p, ft::kKinkedStar, 1.0, 0.1, 1.0);
  EXPECT_EQ(r.gap, 0.0);
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(robustness_gap(p, p, ft::kKinkedStar, 1.0, 0.2, 1.0).bound, 2.0 * r.bound, 1e-15);
  p.epsilon = 0.0;
  EXPECT_THROW(robustness_gap(p, p, ft::kKinkedStar, 1.0, 0.1, 1.0), ConfigError);
}

TEST(RobustnessGap, BoundHoldsOnPerturbedMetrics) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    auto pair = ft::perturbed_pair(rng, 4);
    auto r = robustness_gap(pair.a, pair.b, pair.f, pair.lipschitz, pair.eta, pair.diameter);
    EXPECT_TRUE(r.holds) << "gap " << r.gap << " bound " << r.bound;
  }
}

TEST(Stats, KsAgreesWithReference) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> a(300), b(500);
  for (double& v : a) v = g(rng);
  for (double& v : b) v = std::round(2 * g(rng)) / 2;
  EXPECT_DOUBLE_EQ(stats::ks_distance(a, b), ft::ks_reference(a, b));
  EXPECT_EQ(stats::ks_distance(a, a), 0.0);
}
