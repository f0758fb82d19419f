#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cradar/harness.hpp"

using namespace cradar;

namespace {

ExperimentConfig cost_only(Scenario s, PolicyKind p, std::size_t horizon) {
  ExperimentConfig c;
  c.scenario = s;
  c.policy = p;
  c.horizon = horizon;
  c.rdproc.enabled = false;
  c.tracker.enabled = false;
  c.workers = 1;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cradar-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Episode, HorizonOneFixed) {
  const auto log = run_episode(cost_only(Scenario::coexistence, PolicyKind::fixed, 1), 1);
  ASSERT_EQ(log.pri.size(), 1u);
  EXPECT_EQ(log.pri[0].t, 1u);
  EXPECT_EQ(log.pri[0].waveform_id, 54);
}

TEST(Episode, RerunIsByteIdentical) {
  ExperimentConfig c = cost_only(Scenario::coexistence, PolicyKind::ts, 500);
  c.sensing.flip_prob = 0.05;
  EXPECT_EQ(pri_csv(run_episode(c, 42)), pri_csv(run_episode(c, 42)));
  EXPECT_NE(pri_csv(run_episode(c, 42)), pri_csv(run_episode(c, 43)));
}

TEST(Episode, RerunWithRadarIsByteIdentical) {
  ExperimentConfig c;
  c.horizon = 256;
  const auto a = run_episode(c, 5), b = run_episode(c, 5);
  EXPECT_EQ(pri_csv(a), pri_csv(b));
  EXPECT_EQ(cpi_csv(a), cpi_csv(b));
  EXPECT_EQ(a.cpi.size(), 4u);
}

TEST(Episode, SceneIndependentOfPolicy) {
  // Coexistence truth comes from its own stream, so every policy sees the
  // same interference sequence for a given seed.
  std::vector<std::string> reference;
  for (auto p : {PolicyKind::fixed, PolicyKind::reactive, PolicyKind::ts, PolicyKind::exp3}) {
    const auto log = run_episode(cost_only(Scenario::coexistence, p, 300), 9);
    std::vector<std::string> truth;
    for (const auto& r : log.pri) truth.push_back(r.truth);
    if (reference.empty())
      reference = truth;
    else
      EXPECT_EQ(truth, reference) << to_string(p);
  }
}

TEST(Episode, IncrementsSumToRegret) {
  for (auto s : {Scenario::coexistence, Scenario::jammer, Scenario::synthetic_linear})
    for (auto p : {PolicyKind::ts, PolicyKind::exp3}) {
      const auto log = run_episode(cost_only(s, p, 1000), 3);
      double sum = 0.0;
      for (const auto& r : log.pri) {
        EXPECT_GE(r.regret_increment, -1e-12);
        sum += r.regret_increment;
      }
      EXPECT_NEAR(sum, log.summary.cumulative_regret, 1e-9 * std::max(1.0, sum));
      EXPECT_EQ(log.pri.back().cumulative_regret, log.summary.cumulative_regret);
    }
}

TEST(Episode, ConstraintRespected) {
  ExperimentConfig c = cost_only(Scenario::coexistence, PolicyKind::exp3, 2000);
  c.d_hat = 0.05;
  const auto log = run_episode(c, 4);
  const auto catalog = c.catalog.build();
  const auto weights = DistortionWeights::for_channel(catalog.channel_bandwidth());
  for (std::size_t i = 1; i < log.pri.size(); ++i)
    ASSERT_LT(distortion(catalog.at(log.pri[i].waveform_id), catalog.at(log.pri[i - 1].waveform_id), weights), 0.05);
}

TEST(Episode, IdenticalWaveformsGiveZeroRegret) {
  ExperimentConfig c = cost_only(Scenario::coexistence, PolicyKind::ts, 400);
  c.catalog.waveforms = json::array({{{"id", 0}, {"center_freq_hz", 50e6}, {"bandwidth_hz", 40e6}, {"pulse_duration_s", 0.5e-6}},
                                     {{"id", 1}, {"center_freq_hz", 50e6}, {"bandwidth_hz", 40e6}, {"pulse_duration_s", 0.5e-6}}});
  for (auto p : {PolicyKind::ts, PolicyKind::exp3, PolicyKind::fixed}) {
    c.policy = p;
    const auto log = run_episode(c, 2);
    EXPECT_EQ(log.summary.cumulative_regret, 0.0) << to_string(p);
    EXPECT_EQ(log.summary.average_cost, log.summary.average_oracle_cost) << to_string(p);
  }
}

TEST(Episode, ZeroPenaltyMatchesNoCoupling) {
  ExperimentConfig c;
  c.horizon = 192;
  c.policy = PolicyKind::ts;
  const auto plain = run_episode(c, 6);
  c.tracker.coupling = TrackerCoupling::penalty;
  c.tracker.penalty_weight = 0.0;
  const auto penalized = run_episode(c, 6);
  EXPECT_EQ(pri_csv(plain), pri_csv(penalized));
}

TEST(Episode, WriteAndReplay) {
  for (auto s : {Scenario::coexistence, Scenario::jammer, Scenario::synthetic_linear}) {
    ExperimentConfig c = cost_only(s, s == Scenario::synthetic_linear ? PolicyKind::ts : PolicyKind::exp3, 600);
    c.out = scratch("replay").string();
    c.d_hat = 0.1;
    const auto dir = write_episode(run_episode(c, 11));
    EXPECT_TRUE(fs::exists(dir / "pri.csv"));
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
    const json r = replay(dir);
    EXPECT_TRUE(r.at("consistent").get<bool>()) << r.dump(2);
    EXPECT_EQ(r.at("rows").get<std::size_t>(), 600u);
  }
}

TEST(Episode, ReplayDetectsTampering) {
  ExperimentConfig c = cost_only(Scenario::coexistence, PolicyKind::ts, 200);
  c.out = scratch("tamper").string();
  const auto dir = write_episode(run_episode(c, 1));
  std::istringstream in(slurp(dir / "pri.csv"));
  std::string line, text;
  for (int k = 0; std::getline(in, line); ++k) {
    if (k == 3) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
      f[4] = "0.123";  // cost column
      line = f[0];
      for (std::size_t i = 1; i < f.size(); ++i) line += ',' + f[i];
    }
    text += line + '\n';
  }
  std::ofstream(dir / "pri.csv", std::ios::binary) << text;
  EXPECT_FALSE(replay(dir).at("consistent").get<bool>());
}

TEST(Campaign, SingleSeed) {
  ExperimentConfig c = cost_only(Scenario::jammer, PolicyKind::ts, 300);
  c.out = scratch("single").string();
  const auto r = run_campaign(c);
  ASSERT_EQ(r.seeds.size(), 1u);
  EXPECT_TRUE(r.seeds[0].ok);
  EXPECT_EQ(r.summary.at("aggregate").at("average_cost").at("sd").get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "jammer" / "ts" / "campaign.json"));
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "jammer" / "ts" / "curves.csv"));
}

TEST(Campaign, IdenticalSeedsHaveZeroSpread) {
  ExperimentConfig c = cost_only(Scenario::coexistence, PolicyKind::exp3, 300);
  c.seeds = {7, 7, 7};
  c.workers = 3;
  const auto r = run_campaign(c, false);
  const auto a = Aggregate::of(r.metric(&EpisodeSummary::cumulative_regret));
  EXPECT_EQ(a.sd, 0.0);
  EXPECT_EQ(a.ci95, 0.0);
  EXPECT_EQ(a.n, 3u);
}

TEST(Campaign, ParallelMatchesSerial) {
  ExperimentConfig c = cost_only(Scenario::coexistence, PolicyKind::ts, 300);
  c.seeds = {1, 2, 3, 4};
  const auto serial = run_campaign(c, false);
  c.workers = 4;
  const auto parallel = run_campaign(c, false);
  EXPECT_EQ(serial.summary.dump(), parallel.summary.dump());
}

TEST(Campaign, FailedSeedIsReported) {
  ExperimentConfig c;
  c.horizon = 64;
  c.seeds = {1};
  c.rdproc.target.snr_db = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(run_campaign(c, false), ConfigError);
}

TEST(Sweep, OrderingAndTighterBoundCostsMore) {
  ExperimentConfig c = cost_only(Scenario::coexistence, PolicyKind::ts, 20000);
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  c.out = scratch("sweep").string();
  const auto rows = sweep_dhat(c, {std::nullopt, 0.2, 0.1});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].d_hat, 0.1);
  EXPECT_EQ(rows[1].d_hat, 0.2);
  EXPECT_FALSE(rows[2].d_hat.has_value());
  EXPECT_GT(rows[0].terminal_average_cost, rows[1].terminal_average_cost);
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "sweep.csv"));
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "dhat-0.1" / "coexistence" / "ts" / "campaign.json"));
  EXPECT_THROW(sweep_dhat(c, {0.2}, false), ConfigError);
}

TEST(Aggregate, MeanSdCi) {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto a = Aggregate::of(xs);
  EXPECT_DOUBLE_EQ(a.mean, 2.5);
  EXPECT_NEAR(a.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(a.ci95, 1.96 * a.sd / 2.0, 1e-15);
}
