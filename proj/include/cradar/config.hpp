#pragma once

// Experiment configuration: one JSON document, validated with dotted field
// paths. Unknown keys are rejected so typos surface instead of silently
// falling back to defaults.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cradar/errors.hpp"
#include "cradar/rdproc.hpp"
#include "cradar/scene.hpp"
#include "cradar/spectrum.hpp"
#include "cradar/tracker.hpp"
#include "cradar/waveforms.hpp"

namespace cradar {

using nlohmann::json;

enum class Scenario { coexistence, jammer, synthetic_linear };
enum class PolicyKind { ts, exp3, reactive, fixed };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::coexistence: return "coexistence";
    case Scenario::jammer: return "jammer";
    case Scenario::synthetic_linear: return "synthetic-linear";
  }
  return "";
}

inline std::string to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::ts: return "ts";
    case PolicyKind::exp3: return "exp3";
    case PolicyKind::reactive: return "reactive";
    case PolicyKind::fixed: return "fixed";
  }
  return "";
}

inline std::string to_string(TrackerCoupling c) {
  switch (c) {
    case TrackerCoupling::none: return "none";
    case TrackerCoupling::direct: return "direct";
    case TrackerCoupling::penalty: return "penalty";
  }
  return "";
}

inline Scenario parse_scenario(const std::string& s, const std::string& path = "scenario") {
  if (s == "coexistence") return Scenario::coexistence;
  if (s == "jammer") return Scenario::jammer;
  if (s == "synthetic-linear") return Scenario::synthetic_linear;
  throw ConfigError(path, "unknown scenario '" + s + "' (coexistence, jammer, synthetic-linear)");
}

inline PolicyKind parse_policy(const std::string& s, const std::string& path = "policy") {
  if (s == "ts") return PolicyKind::ts;
  if (s == "exp3") return PolicyKind::exp3;
  if (s == "reactive") return PolicyKind::reactive;
  if (s == "fixed") return PolicyKind::fixed;
  throw ConfigError(path, "unknown policy '" + s + "' (ts, exp3, reactive, fixed)");
}

inline TrackerCoupling parse_coupling(const std::string& s, const std::string& path) {
  if (s == "none") return TrackerCoupling::none;
  if (s == "direct") return TrackerCoupling::direct;
  if (s == "penalty") return TrackerCoupling::penalty;
  throw ConfigError(path, "unknown coupling '" + s + "' (none, direct, penalty)");
}

/// Reads one JSON object, tracking which keys were consumed.
class JsonReader {
 public:
  JsonReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "(root)" : path_, "must be an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  const json* child(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

struct CatalogConfig {
  double channel_bandwidth_hz = 100e6;
  int num_subchannels = 10;
  double step_hz = 10e6;
  double pulse_duration_s = 0.5e-6;
  double carrier_hz = kDefaultCarrierHz;
  bool literal_occupancy = false;
  /// Explicit waveform list; when present the grid parameters other than the
  /// channel description are ignored.
  std::optional<json> waveforms;

  WaveformCatalog build() const {
    const auto conv = literal_occupancy ? OccupancyConvention::literal : OccupancyConvention::centered;
    if (waveforms) {
      json j{{"channel_bandwidth_hz", channel_bandwidth_hz},
             {"num_subchannels", num_subchannels},
             {"waveforms", *waveforms},
             {"carrier_hz", carrier_hz},
             {"literal_occupancy", literal_occupancy}};
      return catalog_from_json(j, "catalog");
    }
    return WaveformCatalog::grid(channel_bandwidth_hz, num_subchannels, step_hz, pulse_duration_s, conv,
                                 carrier_hz);
  }
};

struct CostConfig {
  std::optional<double> beta1;  ///< default 1/(2B)
  std::optional<double> beta2;
  bool allow_negative_missed = false;

  CostParams resolve(double channel_bandwidth_hz) const {
    CostParams p = CostParams::for_channel(channel_bandwidth_hz);
    if (beta1) p.beta1 = *beta1;
    if (beta2) p.beta2 = *beta2;
    p.allow_negative_missed = allow_negative_missed;
    return p;
  }
};

struct LearnerConfig {
  double ts_v = 1.0;
  std::optional<double> exp3_epsilon;  ///< default ln W / (3 d sqrt n)
  std::optional<double> exp3_gamma;    ///< default min(1, sqrt(W ln W / n))
  double exp3_ridge = 1e-8;
};

struct SensingConfig {
  double flip_prob = 0.0;
};

struct TargetConfig {
  double range_m = 400.0;
  double velocity_mps = 10.0;
  double snr_db = 10.0;  ///< single-pulse matched-filter output SNR
};

struct RdprocConfig {
  bool enabled = true;
  RdConfig rd;
  TargetConfig target;
  double coexistence_inr_db = 20.0;
  MetricsConfig metrics;
  std::vector<int> export_cpis;  ///< CPI indices whose maps are written out
};

struct TrackerConfig {
  bool enabled = true;
  double accel_std = 1.0;
  double initial_range_std = 10.0;
  double initial_rate_std = 10.0;
  TrackerCoupling coupling = TrackerCoupling::none;
  double penalty_weight = 0.1;
  /// Detections farther than gate_sigma predicted range std from the track
  /// are ignored; 0 disables gating (strongest detection wins).
  double gate_sigma = 0.0;
};

struct SceneConfig {
  CoexistenceConfig coexistence;
  JammerConfig jammer;
  SyntheticLinearConfig synthetic;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::coexistence;
  PolicyKind policy = PolicyKind::ts;
  std::size_t horizon = 20000;
  std::optional<double> d_hat = 0.2;  ///< nullopt disables the constraint
  std::vector<std::uint64_t> seeds{1};
  std::string out = "results";
  int workers = 0;  ///< 0 uses the hardware concurrency
  std::size_t curve_stride = 100;
  CatalogConfig catalog;
  CostConfig cost;
  LearnerConfig learner;
  SensingConfig sensing;
  SceneConfig scene;
  RdprocConfig rdproc;
  TrackerConfig tracker;

  bool is_learner() const { return policy == PolicyKind::ts || policy == PolicyKind::exp3; }

  void validate() const {
    if (horizon < 1) throw ConfigError("horizon", "must be at least 1");
    if (seeds.empty()) throw ConfigError("seeds", "must not be empty");
    if (d_hat && !(*d_hat > 0.0 && *d_hat <= 1.0)) throw ConfigError("d_hat", "must be in (0, 1] or \"none\"");
    if (workers < 0) throw ConfigError("workers", "must be non-negative");
    if (curve_stride < 1) throw ConfigError("curve_stride", "must be positive");
    if (!(learner.ts_v >= 0.0)) throw ConfigError("learner.ts_v", "must be non-negative");
    if (learner.exp3_epsilon && !(*learner.exp3_epsilon > 0.0 && *learner.exp3_epsilon < 1.0))
      throw ConfigError("learner.exp3_epsilon", "must be in (0, 1)");
    if (learner.exp3_gamma && !(*learner.exp3_gamma >= 0.0 && *learner.exp3_gamma <= 1.0))
      throw ConfigError("learner.exp3_gamma", "must be in [0, 1]");
    if (!(learner.exp3_ridge > 0.0)) throw ConfigError("learner.exp3_ridge", "must be positive");
    if (!(sensing.flip_prob >= 0.0 && sensing.flip_prob < 0.5))
      throw ConfigError("sensing.flip_prob", "must be in [0, 0.5)");
    scene.coexistence.validate("scene.coexistence");
    scene.jammer.validate("scene.jammer");
    scene.synthetic.validate("scene.synthetic");
    if (scenario == Scenario::synthetic_linear && policy == PolicyKind::reactive)
      throw ConfigError("policy", "reactive needs an interference scenario");

    const WaveformCatalog catalog = this->catalog.build();
    cost.resolve(catalog.channel_bandwidth()).validate(catalog.channel_bandwidth(), "cost");
    if (rdproc.enabled && scenario != Scenario::synthetic_linear) {
      rdproc.rd.validate("rdproc");
      if (!(rdproc.target.range_m > 0.0)) throw ConfigError("rdproc.target.range_m", "must be positive");
      if (!std::isfinite(rdproc.target.velocity_mps))
        throw ConfigError("rdproc.target.velocity_mps", "must be finite");
      const double end_range = rdproc.target.range_m + rdproc.target.velocity_mps * horizon * rdproc.rd.pri_s;
      const double gate = rdproc.rd.range_bins * rdproc.rd.range_bin_m();
      if (!(end_range > 0.0 && end_range < gate && rdproc.target.range_m < gate))
        throw ConfigError("rdproc.target", "target leaves the range gate during the run");
      if (!std::isfinite(rdproc.target.snr_db)) throw ConfigError("rdproc.target.snr_db", "must be finite");
      if (!std::isfinite(rdproc.coexistence_inr_db))
        throw ConfigError("rdproc.coexistence_inr_db", "must be finite");
      RangeDopplerProcessor probe(rdproc.rd, catalog);  // checks sample rate against the catalog
    }
    if (!(tracker.accel_std >= 0.0)) throw ConfigError("tracker.accel_std", "must be non-negative");
    if (!(tracker.initial_range_std > 0.0))
      throw ConfigError("tracker.initial_range_std", "must be positive");
    if (!(tracker.initial_rate_std > 0.0)) throw ConfigError("tracker.initial_rate_std", "must be positive");
    if (!(tracker.penalty_weight >= 0.0)) throw ConfigError("tracker.penalty_weight", "must be non-negative");
    if (!(tracker.gate_sigma >= 0.0)) throw ConfigError("tracker.gate_sigma", "must be non-negative");
    if (tracker.coupling != TrackerCoupling::none && !(tracker.enabled && rdproc.enabled))
      throw ConfigError("tracker.coupling", "needs the tracker and rdproc enabled");
  }
};

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["policy"] = to_string(c.policy);
  j["horizon"] = c.horizon;
  j["d_hat"] = c.d_hat ? json(*c.d_hat) : json("none");
  j["seeds"] = c.seeds;
  j["out"] = c.out;
  j["workers"] = c.workers;
  j["curve_stride"] = c.curve_stride;

  json cat{{"channel_bandwidth_hz", c.catalog.channel_bandwidth_hz},
           {"num_subchannels", c.catalog.num_subchannels},
           {"step_hz", c.catalog.step_hz},
           {"pulse_duration_s", c.catalog.pulse_duration_s},
           {"carrier_hz", c.catalog.carrier_hz},
           {"literal_occupancy", c.catalog.literal_occupancy}};
  if (c.catalog.waveforms) cat["waveforms"] = *c.catalog.waveforms;
  j["catalog"] = cat;

  j["cost"] = {{"beta1", optional_json(c.cost.beta1)},
               {"beta2", optional_json(c.cost.beta2)},
               {"allow_negative_missed", c.cost.allow_negative_missed}};
  j["learner"] = {{"ts_v", c.learner.ts_v},
                  {"exp3_epsilon", optional_json(c.learner.exp3_epsilon)},
                  {"exp3_gamma", optional_json(c.learner.exp3_gamma)},
                  {"exp3_ridge", c.learner.exp3_ridge}};
  j["sensing"] = {{"flip_prob", c.sensing.flip_prob}};

  const auto& cc = c.scene.coexistence;
  j["scene"]["coexistence"] = {{"num_bs", cc.num_bs},
                               {"bs_power_dbm_min", cc.bs_power_dbm_min},
                               {"bs_power_dbm_max", cc.bs_power_dbm_max},
                               {"bs_distance_km_min", cc.bs_distance_km_min},
                               {"bs_distance_km_max", cc.bs_distance_km_max},
                               {"path_loss_exp", cc.path_loss_exp},
                               {"intf_bandwidth_hz", cc.intf_bandwidth_hz},
                               {"radar_rx_gain", cc.radar_rx_gain},
                               {"shadow_mean", cc.shadow_mean},
                               {"shadow_std", cc.shadow_std},
                               {"shadow_correlation", cc.shadow_correlation},
                               {"p_on", cc.p_on},
                               {"p_off", cc.p_off},
                               {"threshold_dbm", optional_json(cc.threshold_dbm)},
                               {"target_occupancy", cc.target_occupancy},
                               {"calibration_steps", cc.calibration_steps}};
  j["scene"]["jammer"] = {{"jnr_db", c.scene.jammer.jnr_db}};
  j["scene"]["synthetic"] = {{"num_arms", c.scene.synthetic.num_arms},
                             {"dim", c.scene.synthetic.dim},
                             {"noise_halfwidth", c.scene.synthetic.noise_halfwidth}};

  const auto& rd = c.rdproc.rd;
  j["rdproc"] = {{"enabled", c.rdproc.enabled},
                 {"sample_rate_hz", rd.sample_rate_hz},
                 {"pri_s", rd.pri_s},
                 {"num_pulses", rd.num_pulses},
                 {"range_bins", rd.range_bins},
                 {"window", rd.window == SlowTimeWindow::hann ? "hann" : "none"},
                 {"cfar",
                  {{"guard_range", rd.cfar.guard_range},
                   {"guard_doppler", rd.cfar.guard_doppler},
                   {"train_range", rd.cfar.train_range},
                   {"train_doppler", rd.cfar.train_doppler},
                   {"pfa", rd.cfar.pfa}}},
                 {"target",
                  {{"range_m", c.rdproc.target.range_m},
                   {"velocity_mps", c.rdproc.target.velocity_mps},
                   {"snr_db", c.rdproc.target.snr_db}}},
                 {"coexistence_inr_db", c.rdproc.coexistence_inr_db},
                 {"metrics",
                  {{"range_tolerance", c.rdproc.metrics.range_tolerance},
                   {"doppler_tolerance", c.rdproc.metrics.doppler_tolerance},
                   {"mainlobe_halfwidth", c.rdproc.metrics.mainlobe_halfwidth},
                   {"max_db", c.rdproc.metrics.max_db}}},
                 {"export_cpis", c.rdproc.export_cpis}};
  j["tracker"] = {{"enabled", c.tracker.enabled},
                  {"accel_std", c.tracker.accel_std},
                  {"initial_range_std", c.tracker.initial_range_std},
                  {"initial_rate_std", c.tracker.initial_rate_std},
                  {"coupling", to_string(c.tracker.coupling)},
                  {"penalty_weight", c.tracker.penalty_weight},
                  {"gate_sigma", c.tracker.gate_sigma}};
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  JsonReader root(j, "");
  std::string s;
  if (root.has("scenario")) {
    root.get("scenario", s);
    c.scenario = parse_scenario(s);
  }
  if (root.has("policy")) {
    root.get("policy", s);
    c.policy = parse_policy(s);
  }
  root.get("horizon", c.horizon);
  if (const json* d = root.child("d_hat")) {
    if (d->is_string() && d->get<std::string>() == "none")
      c.d_hat.reset();
    else if (d->is_number())
      c.d_hat = d->get<double>();
    else
      throw ConfigError("d_hat", "must be a number or \"none\"");
  }
  root.get("seeds", c.seeds);
  root.get("out", c.out);
  root.get("workers", c.workers);
  root.get("curve_stride", c.curve_stride);

  if (const json* cj = root.child("catalog")) {
    JsonReader r(*cj, "catalog");
    r.get("channel_bandwidth_hz", c.catalog.channel_bandwidth_hz);
    r.get("num_subchannels", c.catalog.num_subchannels);
    r.get("step_hz", c.catalog.step_hz);
    r.get("pulse_duration_s", c.catalog.pulse_duration_s);
    r.get("carrier_hz", c.catalog.carrier_hz);
    r.get("literal_occupancy", c.catalog.literal_occupancy);
    if (const json* w = r.child("waveforms")) c.catalog.waveforms = *w;
    r.finish();
  }
  if (const json* cj = root.child("cost")) {
    JsonReader r(*cj, "cost");
    r.get("beta1", c.cost.beta1);
    r.get("beta2", c.cost.beta2);
    r.get("allow_negative_missed", c.cost.allow_negative_missed);
    r.finish();
  }
  if (const json* lj = root.child("learner")) {
    JsonReader r(*lj, "learner");
    r.get("ts_v", c.learner.ts_v);
    r.get("exp3_epsilon", c.learner.exp3_epsilon);
    r.get("exp3_gamma", c.learner.exp3_gamma);
    r.get("exp3_ridge", c.learner.exp3_ridge);
    r.finish();
  }
  if (const json* sj = root.child("sensing")) {
    JsonReader r(*sj, "sensing");
    r.get("flip_prob", c.sensing.flip_prob);
    r.finish();
  }
  if (const json* sj = root.child("scene")) {
    JsonReader r(*sj, "scene");
    if (const json* cj = r.child("coexistence")) {
      JsonReader q(*cj, "scene.coexistence");
      auto& cc = c.scene.coexistence;
      q.get("num_bs", cc.num_bs);
      q.get("bs_power_dbm_min", cc.bs_power_dbm_min);
      q.get("bs_power_dbm_max", cc.bs_power_dbm_max);
      q.get("bs_distance_km_min", cc.bs_distance_km_min);
      q.get("bs_distance_km_max", cc.bs_distance_km_max);
      q.get("path_loss_exp", cc.path_loss_exp);
      q.get("intf_bandwidth_hz", cc.intf_bandwidth_hz);
      q.get("radar_rx_gain", cc.radar_rx_gain);
      q.get("shadow_mean", cc.shadow_mean);
      q.get("shadow_std", cc.shadow_std);
      q.get("shadow_correlation", cc.shadow_correlation);
      q.get("p_on", cc.p_on);
      q.get("p_off", cc.p_off);
      q.get("threshold_dbm", cc.threshold_dbm);
      q.get("target_occupancy", cc.target_occupancy);
      q.get("calibration_steps", cc.calibration_steps);
      q.finish();
    }
    if (const json* jj = r.child("jammer")) {
      JsonReader q(*jj, "scene.jammer");
      q.get("jnr_db", c.scene.jammer.jnr_db);
      q.finish();
    }
    if (const json* yj = r.child("synthetic")) {
      JsonReader q(*yj, "scene.synthetic");
      q.get("num_arms", c.scene.synthetic.num_arms);
      q.get("dim", c.scene.synthetic.dim);
      q.get("noise_halfwidth", c.scene.synthetic.noise_halfwidth);
      q.finish();
    }
    r.finish();
  }
  if (const json* rj = root.child("rdproc")) {
    JsonReader r(*rj, "rdproc");
    auto& rd = c.rdproc.rd;
    r.get("enabled", c.rdproc.enabled);
    r.get("sample_rate_hz", rd.sample_rate_hz);
    r.get("pri_s", rd.pri_s);
    r.get("num_pulses", rd.num_pulses);
    r.get("range_bins", rd.range_bins);
    if (r.has("window")) {
      r.get("window", s);
      if (s == "hann")
        rd.window = SlowTimeWindow::hann;
      else if (s == "none")
        rd.window = SlowTimeWindow::none;
      else
        throw ConfigError("rdproc.window", "must be \"hann\" or \"none\"");
    }
    if (const json* fj = r.child("cfar")) {
      JsonReader q(*fj, "rdproc.cfar");
      q.get("guard_range", rd.cfar.guard_range);
      q.get("guard_doppler", rd.cfar.guard_doppler);
      q.get("train_range", rd.cfar.train_range);
      q.get("train_doppler", rd.cfar.train_doppler);
      q.get("pfa", rd.cfar.pfa);
      q.finish();
    }
    if (const json* tj = r.child("target")) {
      JsonReader q(*tj, "rdproc.target");
      q.get("range_m", c.rdproc.target.range_m);
      q.get("velocity_mps", c.rdproc.target.velocity_mps);
      q.get("snr_db", c.rdproc.target.snr_db);
      q.finish();
    }
    r.get("coexistence_inr_db", c.rdproc.coexistence_inr_db);
    if (const json* mj = r.child("metrics")) {
      JsonReader q(*mj, "rdproc.metrics");
      q.get("range_tolerance", c.rdproc.metrics.range_tolerance);
      q.get("doppler_tolerance", c.rdproc.metrics.doppler_tolerance);
      q.get("mainlobe_halfwidth", c.rdproc.metrics.mainlobe_halfwidth);
      q.get("max_db", c.rdproc.metrics.max_db);
      q.finish();
    }
    r.get("export_cpis", c.rdproc.export_cpis);
    r.finish();
  }
  if (const json* tj = root.child("tracker")) {
    JsonReader r(*tj, "tracker");
    r.get("enabled", c.tracker.enabled);
    r.get("accel_std", c.tracker.accel_std);
    r.get("initial_range_std", c.tracker.initial_range_std);
    r.get("initial_rate_std", c.tracker.initial_rate_std);
    if (r.has("coupling")) {
      r.get("coupling", s);
      c.tracker.coupling = parse_coupling(s, "tracker.coupling");
    }
    r.get("penalty_weight", c.tracker.penalty_weight);
    r.get("gate_sigma", c.tracker.gate_sigma);
    r.finish();
  }
  root.finish();
  return c;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot open config file " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace cradar
