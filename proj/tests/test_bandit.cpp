#include <gtest/gtest.h>

#include <cmath>

#include "cradar/bandit.hpp"

using namespace cradar;

namespace {

const WaveformCatalog& grid() {
  static const WaveformCatalog c = WaveformCatalog::grid();
  return c;
}

}  // namespace

TEST(History, ColdStartIsZero) {
  HistoryStore h;
  EXPECT_EQ(h.context(3, InterferenceState(10)), (ContextVector{0, 0, 0}));
}

TEST(History, TwoObservations) {
  HistoryStore h;
  const auto s = InterferenceState::from_string("0100000000");
  h.record(5, s, 0.2);
  h.record(5, s, 0.4);
  const auto c = h.context(5, s);
  EXPECT_NEAR(c.xi1, 0.3, 1e-15);
  EXPECT_NEAR(c.xi2, 0.02, 1e-15);
  EXPECT_EQ(c.xi3, 0.4);
  EXPECT_EQ(h.context(5, InterferenceState(10)), (ContextVector{0, 0, 0}));
  EXPECT_EQ(h.context(6, s), (ContextVector{0, 0, 0}));
}

TEST(History, SingleObservation) {
  HistoryStore h;
  const InterferenceState s(10);
  h.record(1, s, 0.7);
  EXPECT_EQ(h.context(1, s), (ContextVector{0.7, 0.0, 0.7}));
}

TEST(History, MatchesBatchStatistics) {
  HistoryStore h;
  const InterferenceState s(10, 0b101);
  Rng rng(8);
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) {
    xs.push_back(rng.uniform());
    h.record(2, s, xs.back());
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size() - 1;
  const auto c = h.context(2, s);
  EXPECT_NEAR(c.xi1, mean, 1e-12);
  EXPECT_NEAR(c.xi2, var, 1e-12);
  EXPECT_EQ(c.xi3, xs.back());
}

TEST(Thompson, SingleCandidate) {
  ThompsonSampler<3> ts;
  Rng rng(1);
  const std::vector<Arm<3>> arms{{17, Eigen::Vector3d(0.3, 0.1, 0.9)}};
  for (int i = 0; i < 10; ++i) EXPECT_EQ(ts.select(arms, rng), 17);
}

TEST(Thompson, FirstUpdateByHand) {
  ThompsonSampler<3> ts;
  ts.update(Eigen::Vector3d(1, 0, 0), 0.5);
  EXPECT_EQ(ts.precision(), Eigen::Matrix3d(Eigen::Vector3d(2, 1, 1).asDiagonal()));
  EXPECT_EQ(ts.f(), Eigen::Vector3d(0.5, 0, 0));
  EXPECT_NEAR(ts.theta_hat()[0], 0.25, 1e-15);
  EXPECT_EQ(ts.theta_hat()[1], 0.0);
}

TEST(Thompson, ZeroContextIsNoOp) {
  ThompsonSampler<3> ts;
  ts.update(Eigen::Vector3d(0.2, 0.1, 0.3), 0.4);
  const auto B = ts.precision();
  const auto f = ts.f();
  ts.update(Eigen::Vector3d::Zero(), 0.9);
  EXPECT_EQ(ts.precision(), B);
  EXPECT_EQ(ts.f(), f);
}

TEST(Thompson, IncrementalEqualsBatchRidge) {
  ThompsonSampler<3> ts;
  Rng rng(2);
  Eigen::Matrix3d B = Eigen::Matrix3d::Identity();
  Eigen::Vector3d f = Eigen::Vector3d::Zero();
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d x(rng.uniform(), rng.uniform(), rng.uniform());
    const double c = rng.uniform();
    ts.update(x, c);
    B += x * x.transpose();
    f += x * c;
  }
  const Eigen::Vector3d batch = B.fullPivLu().solve(f);
  EXPECT_LT((ts.theta_hat() - batch).norm(), 1e-9 * batch.norm());
}

TEST(Thompson, SmallScalePicksLowerInnerProduct) {
  ThompsonSampler<3> ts(1e-6);
  for (int i = 0; i < 50; ++i) ts.update(Eigen::Vector3d(1, 0, 0), 1.0);
  const std::vector<Arm<3>> arms{{0, Eigen::Vector3d(0.9, 0.5, 0.5)}, {1, Eigen::Vector3d(0.1, 0.5, 0.5)}};
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(ts.select(arms, rng), 1);
}

TEST(Thompson, IdenticalContextsPickLowestId) {
  ThompsonSampler<3> ts;
  const Eigen::Vector3d x(0.4, 0.2, 0.1);
  const std::vector<Arm<3>> arms{{9, x}, {4, x}, {7, x}};
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(ts.select(arms, rng), 4);
}

TEST(Exp3, EqualEstimatesGiveUniform) {
  Exp3Learner<3> e(5, 0.1, 0.2);
  const std::vector<int> ids{0, 2, 4};
  for (double p : e.distribution(ids)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(Exp3, TwoArmExample) {
  Exp3Learner<1> e(2, 0.5, 0.0, 1);
  // Drive cumulative estimates to (0, 1): one-dimensional context 1 on arm 1
  // only, played with probability 1/2 and cost 0.5 -> theta = 0.5 / 0.5 = 1.
  const std::vector<Arm<1>> arms{{0, Eigen::Matrix<double, 1, 1>(0.0)}, {1, Eigen::Matrix<double, 1, 1>(1.0)}};
  e.update(arms, 1, 0.5, std::vector<double>{0.5, 0.5});
  ASSERT_EQ(e.cumulative_estimates()[0], 0.0);
  ASSERT_NEAR(e.cumulative_estimates()[1], 1.0, 1e-15);
  Exp3Learner<1> unit(2, 0.999999999, 0.0, 1);
  unit.update(arms, 1, 0.5, std::vector<double>{0.5, 0.5});
  const auto p = unit.distribution(std::vector<int>{0, 1});
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-8);
  EXPECT_NEAR(p[1], std::exp(-1.0) / (1.0 + std::exp(-1.0)), 1e-8);
}

TEST(Exp3, GammaOneIsUniform) {
  Exp3Learner<3> e(4, 0.3, 1.0);
  std::vector<Arm<3>> arms;
  for (int i = 0; i < 4; ++i) arms.push_back({i, Eigen::Vector3d(1.0 + i, 0.5, 0.1 * i)});
  e.update(arms, 2, 0.8, std::vector<double>(4, 0.25));
  for (double p : e.distribution(std::vector<int>{0, 1, 2, 3})) EXPECT_EQ(p, 0.25);
}

TEST(Exp3, OneHotRecoversImportanceWeighting) {
  constexpr int W = 10;
  Exp3Learner<Eigen::Dynamic> e(W, 0.05, 1.0, W);
  std::vector<Arm<Eigen::Dynamic>> arms;
  for (int i = 0; i < W; ++i) arms.push_back({i, Eigen::VectorXd::Unit(W, i)});
  const std::vector<double> uniform(W, 1.0 / W);
  e.update(arms, 3, 0.6, uniform);
  for (int i = 0; i < W; ++i) EXPECT_NEAR(e.cumulative_estimates()[i], i == 3 ? W * 0.6 : 0.0, 1e-12);
}

TEST(Exp3, ZeroCostLeavesEstimates) {
  Exp3Learner<3> e(3, 0.1, 0.1);
  std::vector<Arm<3>> arms;
  for (int i = 0; i < 3; ++i) arms.push_back({i, Eigen::Vector3d::Random()});
  e.update(arms, 1, 0.0, std::vector<double>(3, 1.0 / 3.0));
  for (double s : e.cumulative_estimates()) EXPECT_EQ(s, 0.0);
}

TEST(Exp3, ScalarContextGivesCostEverywhere) {
  Exp3Learner<1> e(4, 0.1, 0.0, 1);
  std::vector<Arm<1>> arms;
  for (int i = 0; i < 4; ++i) arms.push_back({i, Eigen::Matrix<double, 1, 1>(0.7)});
  e.update(arms, 2, 0.35, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  for (double s : e.cumulative_estimates()) EXPECT_NEAR(s, 0.35, 1e-12);
}

TEST(Exp3, DefaultParameters) {
  EXPECT_NEAR(Exp3Learner<3>::default_epsilon(55, 3, 20000), std::log(55.0) / (9.0 * std::sqrt(20000.0)), 1e-15);
  EXPECT_NEAR(Exp3Learner<3>::default_gamma(55, 20000), std::sqrt(55.0 * std::log(55.0) / 20000.0), 1e-15);
  EXPECT_EQ(Exp3Learner<3>::default_gamma(55, 10), 1.0);
}

TEST(Exp3, DistributionSumsToOne) {
  Exp3Learner<3> e(55, 0.2, 0.05);
  Rng rng(5);
  std::vector<Arm<3>> arms;
  std::vector<int> ids;
  for (int i = 0; i < 55; ++i) {
    arms.push_back({i, Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform())});
    ids.push_back(i);
  }
  for (int t = 0; t < 50; ++t) {
    const auto p = e.distribution(ids);
    double sum = 0.0;
    for (double q : p) {
      ASSERT_GT(q, 0.0);
      sum += q;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    const int played = ids[Exp3Learner<3>::sample(p, rng)];
    e.update(arms, played, rng.uniform(), p);
  }
}

TEST(Regret, Increments) {
  RegretLedger l;
  EXPECT_EQ(l.record(0.3, 0.3), 0.0);
  EXPECT_NEAR(l.record(0.5, 0.2), 0.3, 1e-15);
  RegretLedger k;
  for (int i = 0; i < 1000; ++i) k.record(0.25, 0.125);
  EXPECT_EQ(k.cumulative_regret(), 125.0);
  EXPECT_EQ(k.average_cost(), 0.25);
}

TEST(Baselines, FixedIsFullBand) {
  EXPECT_EQ(baseline_fixed(grid()).id, 54);
}

TEST(Baselines, ReactiveCleanChannel) {
  EXPECT_EQ(baseline_reactive(InterferenceState(10), grid(), std::nullopt).id, 54);
}

TEST(Baselines, ReactiveLongestRun) {
  const auto w = baseline_reactive(InterferenceState::from_string("1100000000"), grid(), std::nullopt);
  EXPECT_EQ(w.bandwidth_hz, 80e6);
  EXPECT_EQ(w.center_freq_hz, 60e6);
}

TEST(Baselines, ReactiveFallsBackWhenJammed) {
  const auto all = InterferenceState::from_string("1111111111");
  EXPECT_EQ(baseline_reactive(all, grid(), grid().at(7)).id, 7);
  EXPECT_EQ(baseline_reactive(all, grid(), std::nullopt).id, 54);
}
