#include <gtest/gtest.h>

#include "cradar/config.hpp"

using namespace cradar;

namespace {

std::string field_of(const json& j) {
  try {
    config_from_json(j).validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, DefaultsValidate) {
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
  EXPECT_NO_THROW(config_from_json(json::object()).validate());
}

TEST(Config, RoundTrip) {
  ExperimentConfig c;
  c.scenario = Scenario::jammer;
  c.policy = PolicyKind::exp3;
  c.horizon = 1234;
  c.d_hat.reset();
  c.seeds = {3, 5, 8};
  c.learner.exp3_gamma = 0.25;
  c.tracker.coupling = TrackerCoupling::penalty;
  c.tracker.gate_sigma = 3.0;
  c.sensing.flip_prob = 0.05;
  const ExperimentConfig back = config_from_json(to_json(c));
  EXPECT_TRUE(back == c);
  EXPECT_FALSE(back.d_hat.has_value());
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Config, DhatNone) {
  EXPECT_FALSE(config_from_json(json{{"d_hat", "none"}}).d_hat.has_value());
  EXPECT_DOUBLE_EQ(*config_from_json(json{{"d_hat", 0.05}}).d_hat, 0.05);
  EXPECT_EQ(field_of(json{{"d_hat", "loose"}}), "d_hat");
  EXPECT_EQ(field_of(json{{"d_hat", 0.0}}), "d_hat");
  EXPECT_EQ(field_of(json{{"d_hat", 1.5}}), "d_hat");
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_EQ(field_of(json{{"horizn", 10}}), "horizn");
  EXPECT_EQ(field_of(json{{"scene", {{"coexistence", {{"num_bss", 3}}}}}}), "scene.coexistence.num_bss");
}

TEST(Config, ValidationNamesField) {
  EXPECT_EQ(field_of(json{{"horizon", 0}}), "horizon");
  EXPECT_EQ(field_of(json{{"seeds", json::array()}}), "seeds");
  EXPECT_EQ(field_of(json{{"scenario", "desert"}}), "scenario");
  EXPECT_EQ(field_of(json{{"policy", "greedy"}}), "policy");
  EXPECT_EQ(field_of(json{{"sensing", {{"flip_prob", 0.5}}}}), "sensing.flip_prob");
  EXPECT_EQ(field_of(json{{"learner", {{"exp3_epsilon", 1.0}}}}), "learner.exp3_epsilon");
  EXPECT_EQ(field_of(json{{"tracker", {{"gate_sigma", -1.0}}}}), "tracker.gate_sigma");
  EXPECT_EQ(field_of(json{{"horizon", "long"}}), "horizon");
  EXPECT_EQ(field_of(json{{"scenario", "synthetic-linear"}, {"policy", "reactive"}}), "policy");
}

TEST(Config, TargetMustStayInGate) {
  EXPECT_EQ(field_of(json{{"horizon", 20000}, {"rdproc", {{"target", {{"velocity_mps", 5000.0}}}}}}),
            "rdproc.target");
}

TEST(Config, CouplingNeedsTracker) {
  EXPECT_EQ(field_of(json{{"tracker", {{"coupling", "direct"}, {"enabled", false}}}}), "tracker.coupling");
}
