#pragma once

// Episode loop, per-CPI detection and tracking, logs, multi-seed campaigns,
// distortion-bound sweeps and log replay.
//
// PRI loop: sense -> constrained catalog -> contexts -> select -> environment
// emits the true state -> cost -> learner update -> log. Every num_pulses PRIs
// the transmitted pulses are processed as one CPI.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cradar/bandit.hpp"
#include "cradar/config.hpp"
#include "cradar/errors.hpp"
#include "cradar/rdproc.hpp"
#include "cradar/rng.hpp"
#include "cradar/scene.hpp"
#include "cradar/spectrum.hpp"
#include "cradar/tracker.hpp"
#include "cradar/waveforms.hpp"

namespace cradar {

namespace fs = std::filesystem;

struct PriRow {
  std::size_t t = 0;  // 1-based
  std::string sensed;
  std::string truth;
  int waveform_id = 0;
  double cost = 0.0;
  double oracle_cost = 0.0;
  double regret_increment = 0.0;
  double cumulative_regret = 0.0;
};

struct CpiRow {
  std::size_t cpi_index = 0;
  std::size_t t_end = 0;
  bool detected = false;
  std::size_t detections = 0;
  std::size_t false_alarms = 0;
  double pfa_hat = 0.0;
  double image_sinr_db = 0.0;
  double peak_sidelobe_db = 0.0;
  bool measured = false;
  double meas_range = 0.0;
  double meas_rate = 0.0;
  double meas_snr_db = 0.0;
  double truth_range = 0.0;
  double truth_rate = 0.0;
  double est_range = 0.0;
  double est_rate = 0.0;
  double p11 = 0.0, p12 = 0.0, p22 = 0.0;
  double chosen_T = 0.0;
  double chosen_alpha = 0.0;
  double nis = 0.0;
  std::vector<double> doppler_profile;
};

struct EpisodeSummary {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  std::optional<double> d_hat;
  double average_cost = 0.0;
  double average_oracle_cost = 0.0;
  double cumulative_regret = 0.0;
  std::size_t num_cpis = 0;
  double pd = 0.0;
  double mean_pfa_hat = 0.0;
  double mean_image_sinr_db = 0.0;
  double mean_peak_sidelobe_db = 0.0;
  double rmse_m = 0.0;
  double mean_nis = 0.0;
  std::size_t degenerate_updates = 0;
  std::size_t covariance_repairs = 0;

  json to_json() const {
    return {{"scenario", scenario},
            {"policy", policy},
            {"seed", seed},
            {"horizon", horizon},
            {"d_hat", d_hat ? json(*d_hat) : json("none")},
            {"average_cost", average_cost},
            {"average_oracle_cost", average_oracle_cost},
            {"cumulative_regret", cumulative_regret},
            {"num_cpis", num_cpis},
            {"pd", pd},
            {"mean_pfa_hat", mean_pfa_hat},
            {"mean_image_sinr_db", mean_image_sinr_db},
            {"mean_peak_sidelobe_db", mean_peak_sidelobe_db},
            {"rmse_m", rmse_m},
            {"mean_nis", mean_nis},
            {"degenerate_updates", degenerate_updates},
            {"covariance_repairs", covariance_repairs}};
  }
};

struct EpisodeLog {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::vector<PriRow> pri;
  std::vector<CpiRow> cpi;
  EpisodeSummary summary;
  std::vector<std::pair<std::size_t, RangeDopplerMap>> exported_maps;
};

namespace detail {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Per-episode radar chain: pulses of the current CPI, the processor and the
// track.
class CpiChain {
 public:
  CpiChain(const ExperimentConfig& cfg, const WaveformCatalog& catalog)
      : cfg_(cfg),
        catalog_(catalog),
        processor_(cfg.rdproc.rd, catalog),
        box_(ParamBox::of(catalog.waveforms())) {
    const auto& tgt = cfg.rdproc.target;
    const double energy = catalog.widest().amplitude * catalog.widest().amplitude *
                          catalog.widest().pulse_duration_s * std::sqrt(std::numbers::pi / 2.0) *
                          cfg.rdproc.rd.sample_rate_hz;
    gain_ = std::sqrt(db_to_linear(tgt.snr_db) * kNoisePower / energy);
    interference_power_ =
        kNoisePower * db_to_linear(cfg.scenario == Scenario::jammer ? cfg.scene.jammer.jnr_db
                                                                    : cfg.rdproc.coexistence_inr_db);
    track_.x = Vec2(tgt.range_m, 0.0);
    track_.P = Vec2(cfg.tracker.initial_range_std * cfg.tracker.initial_range_std,
                    cfg.tracker.initial_rate_std * cfg.tracker.initial_rate_std)
                   .asDiagonal();
    ids_.reserve(static_cast<std::size_t>(cfg.rdproc.rd.num_pulses));
    states_.reserve(static_cast<std::size_t>(cfg.rdproc.rd.num_pulses));
  }

  /// Records one transmitted pulse; returns true when a CPI is complete.
  bool add_pulse(int waveform_id, const InterferenceState& truth) {
    ids_.push_back(waveform_id);
    states_.push_back(truth);
    return static_cast<int>(ids_.size()) == cfg_.rdproc.rd.num_pulses;
  }

  CpiRow process(std::size_t cpi_index, std::size_t t_end, Rng& noise_rng,
                 std::optional<RangeDopplerMap>* keep_map) {
    const auto& rd = cfg_.rdproc.rd;
    const auto& tgt = cfg_.rdproc.target;
    const std::size_t first_pulse = t_end - ids_.size();  // 0-based global index
    const double t0 = static_cast<double>(first_pulse) * rd.pri_s;
    const double range0 = tgt.range_m + tgt.velocity_mps * t0;
    PointTarget target{{gain_, 0.0}, RangeDopplerProcessor::delay_of(range0), tgt.velocity_mps};

    const CpiBuffer buf =
        processor_.receive(ids_, std::span(&target, 1), states_, interference_power_, kNoisePower, noise_rng);
    RangeDopplerMap map = processor_.range_doppler(buf);
    const auto detections = cfar_2d(map, rd.cfar);

    CpiRow row;
    row.cpi_index = cpi_index;
    row.t_end = t_end;
    row.truth_range = range0 + tgt.velocity_mps * 0.5 * rd.num_pulses * rd.pri_s;
    row.truth_rate = tgt.velocity_mps;
    const CpiMetrics m = compute_metrics(map, {row.truth_range, row.truth_rate}, detections, cfg_.rdproc.metrics);
    row.detected = m.detected;
    row.detections = detections.size();
    row.false_alarms = m.false_alarms;
    row.pfa_hat = m.pfa_hat;
    row.image_sinr_db = m.image_sinr_db;
    row.peak_sidelobe_db = m.peak_sidelobe_db;
    row.doppler_profile = m.doppler_profile;

    double mean_t = 0.0, mean_alpha = 0.0;
    for (int id : ids_) {
      mean_t += catalog_.at(id).pulse_duration_s;
      mean_alpha += catalog_.at(id).chirp_rate();
    }
    mean_t /= static_cast<double>(ids_.size());
    mean_alpha /= static_cast<double>(ids_.size());
    row.chosen_T = mean_t;
    row.chosen_alpha = mean_alpha;

    if (cfg_.tracker.enabled) {
      std::optional<Vec2> z;
      Mat2 N = Mat2::Identity();
      if (const auto best = associate(map, detections, mean_t, mean_alpha)) {
        row.measured = true;
        row.meas_range = map.range_m(best->range_bin);
        row.meas_rate = map.range_rate(best->doppler_bin);
        const double snr = std::max(best->snr(), 1e-3);
        row.meas_snr_db = 10.0 * std::log10(snr);
        z = Vec2(row.meas_range, row.meas_rate);
        N = measurement_noise(mean_t, mean_alpha, snr, catalog_.carrier_hz());
      }
      KalmanDiagnostics diag;
      track_ = kalman_step(track_, z, N, rd.cpi_duration_s(), process_noise(rd.cpi_duration_s(), cfg_.tracker.accel_std),
                           &diag);
      if (diag.clamped) ++repairs_;
      row.nis = diag.nis;
      row.est_range = track_.x[0];
      row.est_rate = track_.x[1];
      row.p11 = track_.P(0, 0);
      row.p12 = track_.P(0, 1);
      row.p22 = track_.P(1, 1);
      try {
        params_ = box_.clamp(optimal_waveform_params(track_.P, catalog_.carrier_hz()));
      } catch (const DomainError&) {
        params_.reset();
      }
    }
    if (keep_map) *keep_map = std::move(map);
    ids_.clear();
    states_.clear();
    return row;
  }

  /// Nearest detection in range to the predicted track inside the gate, or
  /// the strongest detection when gating is off.
  std::optional<Detection> associate(const RangeDopplerMap& map, std::span<const Detection> detections,
                                     double T, double alpha) const {
    if (cfg_.tracker.gate_sigma <= 0.0) return strongest_detection(detections);
    const double dt = cfg_.rdproc.rd.cpi_duration_s();
    const TrackState pred = kalman_predict(track_, dt, process_noise(dt, cfg_.tracker.accel_std));
    std::optional<Detection> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& d : detections) {
      const double eta = std::max(d.snr(), 1e-3);
      const double var = pred.P(0, 0) + measurement_noise(T, alpha, eta, catalog_.carrier_hz())(0, 0);
      const double dr = std::abs(map.range_m(d.range_bin) - pred.x[0]);
      if (dr > cfg_.tracker.gate_sigma * std::sqrt(var)) continue;
      if (dr < best_d || (dr == best_d && d.magnitude > best->magnitude)) {
        best = d;
        best_d = dr;
      }
    }
    return best;
  }

  const std::optional<WaveformParams>& params() const { return params_; }
  const ParamBox& box() const { return box_; }
  std::size_t repairs() const { return repairs_; }

  static constexpr double kNoisePower = 1.0;

 private:
  const ExperimentConfig& cfg_;
  const WaveformCatalog& catalog_;
  RangeDopplerProcessor processor_;
  ParamBox box_;
  double gain_ = 0.0;
  double interference_power_ = 0.0;
  TrackState track_;
  std::optional<WaveformParams> params_;
  std::vector<int> ids_;
  std::vector<InterferenceState> states_;
  std::size_t repairs_ = 0;
};

inline void finish_summary(EpisodeLog& log, const RegretLedger& ledger) {
  auto& s = log.summary;
  s.scenario = to_string(log.config.scenario);
  s.policy = to_string(log.config.policy);
  s.seed = log.seed;
  s.horizon = log.config.horizon;
  s.d_hat = log.config.d_hat;
  s.average_cost = 0.0;
  for (const auto& r : log.pri) s.average_cost += r.cost;
  s.average_cost /= static_cast<double>(std::max<std::size_t>(log.pri.size(), 1));
  s.average_oracle_cost = ledger.average_oracle_cost();
  s.cumulative_regret = ledger.cumulative_regret();
  s.num_cpis = log.cpi.size();
  if (log.cpi.empty()) return;
  double pd = 0, pfa = 0, sinr = 0, psl = 0, nis = 0;
  std::size_t measured = 0;
  std::vector<double> est, truth;
  for (const auto& c : log.cpi) {
    pd += c.detected;
    pfa += c.pfa_hat;
    sinr += c.image_sinr_db;
    psl += c.peak_sidelobe_db;
    if (c.measured) {
      nis += c.nis;
      ++measured;
    }
    est.push_back(c.est_range);
    truth.push_back(c.truth_range);
  }
  const double k = static_cast<double>(log.cpi.size());
  s.pd = pd / k;
  s.mean_pfa_hat = pfa / k;
  s.mean_image_sinr_db = sinr / k;
  s.mean_peak_sidelobe_db = psl / k;
  s.mean_nis = measured ? nis / static_cast<double>(measured) : 0.0;
  if (log.config.tracker.enabled) s.rmse_m = rmse(est, truth);
}

inline EpisodeLog run_synthetic(const ExperimentConfig& cfg, std::uint64_t seed) {
  EpisodeLog log;
  log.config = cfg;
  log.seed = seed;
  StreamFactory streams(seed);
  Rng setup = streams.stream("scene.setup");
  Rng scene_rng = streams.stream("scene");
  Rng policy_rng = streams.stream("policy");
  Rng noise_rng = streams.stream("scene.noise");

  const SyntheticLinearEnv env(cfg.scene.synthetic, setup);
  const int d = cfg.scene.synthetic.dim;
  const auto W = static_cast<std::size_t>(cfg.scene.synthetic.num_arms);
  ThompsonSampler<Eigen::Dynamic> ts(cfg.learner.ts_v, d);
  Exp3Learner<Eigen::Dynamic> exp3(
      W, cfg.learner.exp3_epsilon.value_or(Exp3Learner<Eigen::Dynamic>::default_epsilon(W, d, cfg.horizon)),
      cfg.learner.exp3_gamma.value_or(Exp3Learner<Eigen::Dynamic>::default_gamma(W, cfg.horizon)), d,
      cfg.learner.exp3_ridge);
  RegretLedger ledger;
  std::vector<int> ids(W);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<Arm<Eigen::Dynamic>> arms(W);
  log.pri.reserve(cfg.horizon);

  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    const auto xs = env.contexts(scene_rng);
    for (std::size_t i = 0; i < W; ++i) arms[i] = {static_cast<int>(i), xs[i]};
    int chosen = 0;
    std::vector<double> dist;
    if (cfg.policy == PolicyKind::ts) {
      chosen = ts.select(arms, policy_rng);
    } else if (cfg.policy == PolicyKind::exp3) {
      dist = exp3.distribution(ids);
      chosen = ids[Exp3Learner<Eigen::Dynamic>::sample(dist, policy_rng)];
    }
    const auto& x = xs[static_cast<std::size_t>(chosen)];
    const double c = env.realize(x, noise_rng);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& xi : xs) best = std::min(best, env.expected_cost(xi));
    if (cfg.policy == PolicyKind::ts) ts.update(x, c);
    if (cfg.policy == PolicyKind::exp3) {
      try {
        exp3.update(arms, chosen, c, dist);
      } catch (const DegenerateContextError&) {
        ++log.summary.degenerate_updates;
      }
    }
    const double inc = ledger.record(env.expected_cost(x), best);
    log.pri.push_back({t, "", "", chosen, c, best, inc, ledger.cumulative_regret()});
  }
  finish_summary(log, ledger);
  return log;
}

}  // namespace detail

/// One seeded episode. Identical (config, seed) pairs give identical logs.
inline EpisodeLog run_episode(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.scenario == Scenario::synthetic_linear) return detail::run_synthetic(cfg, seed);

  EpisodeLog log;
  log.config = cfg;
  log.seed = seed;
  const WaveformCatalog catalog = cfg.catalog.build();
  const CostParams cost_params = cfg.cost.resolve(catalog.channel_bandwidth());
  const int S = catalog.num_subchannels();
  const std::size_t W = catalog.size();

  StreamFactory streams(seed);
  Rng setup = streams.stream("scene.setup");
  Rng scene_rng = streams.stream("scene");
  Rng policy_rng = streams.stream("policy");
  Rng sensing_rng = streams.stream("sensing");
  Rng noise_rng = streams.stream("rdproc.noise");

  std::optional<CoexistenceScene> coexistence;
  if (cfg.scenario == Scenario::coexistence)
    coexistence.emplace(cfg.scene.coexistence, catalog.channel_bandwidth(), S, setup);

  HistoryStore history;
  ThompsonSampler<3> ts(cfg.learner.ts_v);
  Exp3Learner<3> exp3(W, cfg.learner.exp3_epsilon.value_or(Exp3Learner<3>::default_epsilon(W, 3, cfg.horizon)),
                      cfg.learner.exp3_gamma.value_or(Exp3Learner<3>::default_gamma(W, cfg.horizon)), 3,
                      cfg.learner.exp3_ridge);
  RegretLedger ledger;

  const bool radar = cfg.rdproc.enabled;
  std::optional<detail::CpiChain> chain;
  if (radar) chain.emplace(cfg, catalog);

  InterferenceState previous_truth(S);
  InterferenceState jammed(S);
  std::optional<Waveform> w1, w2;
  std::vector<Waveform> allowed;
  std::vector<int> allowed_ids;
  std::vector<Arm<3>> arms;
  log.pri.reserve(cfg.horizon);
  std::size_t cpi_index = 0;

  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    const InterferenceState sensed = sense(previous_truth, cfg.sensing.flip_prob, sensing_rng);

    allowed.clear();
    if (cfg.is_learner() && cfg.d_hat && w1)
      allowed = constrained_catalog(catalog, *w1, *cfg.d_hat);
    else
      allowed.assign(catalog.begin(), catalog.end());
    const WaveformParams* params = chain && chain->params() ? &*chain->params() : nullptr;
    if (cfg.is_learner() && params && cfg.tracker.coupling == TrackerCoupling::direct) {
      // The tracker fixes (T, alpha); the learner still chooses among the
      // allowed placements of that chirp.
      const Waveform pick = select_tracked_waveform(*params, allowed, chain->box());
      std::erase_if(allowed, [&](const Waveform& w) {
        return w.pulse_duration_s != pick.pulse_duration_s || w.bandwidth_hz != pick.bandwidth_hz;
      });
    }
    allowed_ids.clear();
    arms.clear();
    for (const auto& w : allowed) {
      allowed_ids.push_back(w.id);
      arms.push_back({w.id, history.context(w.id, sensed).vector()});
    }

    int chosen = 0;
    std::vector<double> dist;
    switch (cfg.policy) {
      case PolicyKind::ts: chosen = ts.select(arms, policy_rng); break;
      case PolicyKind::exp3:
        dist = exp3.distribution(allowed_ids);
        chosen = allowed_ids[Exp3Learner<3>::sample(dist, policy_rng)];
        break;
      case PolicyKind::fixed: chosen = baseline_fixed(catalog).id; break;
      case PolicyKind::reactive: chosen = baseline_reactive(sensed, catalog, w1).id; break;
    }

    InterferenceState truth(S);
    if (coexistence) {
      truth = coexistence->step(scene_rng);
    } else {
      truth = jammer_step(w1, w2, jammed, catalog);
      jammed = truth;
    }

    const auto costs = cost_table(truth, cost_params, catalog);
    const double c = costs[static_cast<std::size_t>(chosen)];
    double oracle = std::numeric_limits<double>::infinity();
    for (int id : allowed_ids) oracle = std::min(oracle, costs[static_cast<std::size_t>(id)]);

    double observed = c;
    if (cfg.is_learner() && params && cfg.tracker.coupling == TrackerCoupling::penalty)
      observed += tracking_penalty(*params, catalog.at(chosen), cfg.tracker.penalty_weight, chain->box());

    std::size_t chosen_index = 0;
    while (chosen_index < arms.size() && arms[chosen_index].id != chosen) ++chosen_index;
    if (cfg.policy == PolicyKind::ts) ts.update(arms[chosen_index].x, observed);
    if (cfg.policy == PolicyKind::exp3) {
      try {
        exp3.update(arms, chosen, observed, dist);
      } catch (const DegenerateContextError&) {
        ++log.summary.degenerate_updates;
      }
    }
    history.record(chosen, sensed, observed);

    const double inc = ledger.record(c, oracle);
    log.pri.push_back({t, sensed.to_string(), truth.to_string(), chosen, c, oracle, inc, ledger.cumulative_regret()});

    if (chain && chain->add_pulse(chosen, truth)) {
      std::optional<RangeDopplerMap> map;
      const bool keep = std::find(cfg.rdproc.export_cpis.begin(), cfg.rdproc.export_cpis.end(),
                                  static_cast<int>(cpi_index)) != cfg.rdproc.export_cpis.end();
      log.cpi.push_back(chain->process(cpi_index, t, noise_rng, keep ? &map : nullptr));
      if (keep && map) log.exported_maps.emplace_back(cpi_index, std::move(*map));
      ++cpi_index;
    }

    w2 = w1;
    w1 = catalog.at(chosen);
    previous_truth = truth;
  }
  if (chain) log.summary.covariance_repairs = chain->repairs();
  detail::finish_summary(log, ledger);
  return log;
}

inline std::string pri_csv(const EpisodeLog& log) {
  std::string out = "t,sensed,truth,waveform_id,cost,oracle_cost,regret_increment,cumulative_regret\n";
  out.reserve(log.pri.size() * 96);
  for (const auto& r : log.pri) {
    out += std::to_string(r.t) + ',' + r.sensed + ',' + r.truth + ',' + std::to_string(r.waveform_id) + ',' +
           detail::fmt(r.cost) + ',' + detail::fmt(r.oracle_cost) + ',' + detail::fmt(r.regret_increment) + ',' +
           detail::fmt(r.cumulative_regret) + '\n';
  }
  return out;
}

inline std::string cpi_csv(const EpisodeLog& log) {
  std::string out =
      "cpi_index,t_end,detected,detections,false_alarms,pfa_hat,image_sinr_db,peak_sidelobe_db,measured,"
      "meas_range,meas_rate,meas_snr_db,truth_range,truth_rate,est_range,est_rate,p11,p12,p22,chosen_T,"
      "chosen_alpha,nis\n";
  using detail::fmt;
  for (const auto& c : log.cpi) {
    out += std::to_string(c.cpi_index) + ',' + std::to_string(c.t_end) + ',' + std::to_string(c.detected) + ',' +
           std::to_string(c.detections) + ',' + std::to_string(c.false_alarms) + ',' + fmt(c.pfa_hat) + ',' +
           fmt(c.image_sinr_db) + ',' + fmt(c.peak_sidelobe_db) + ',' + std::to_string(c.measured) + ',' +
           fmt(c.meas_range) + ',' + fmt(c.meas_rate) + ',' + fmt(c.meas_snr_db) + ',' + fmt(c.truth_range) + ',' +
           fmt(c.truth_rate) + ',' + fmt(c.est_range) + ',' + fmt(c.est_rate) + ',' + fmt(c.p11) + ',' +
           fmt(c.p12) + ',' + fmt(c.p22) + ',' + fmt(c.chosen_T) + ',' + fmt(c.chosen_alpha) + ',' + fmt(c.nis) +
           '\n';
  }
  return out;
}

inline fs::path episode_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return fs::path(cfg.out) / to_string(cfg.scenario) / to_string(cfg.policy) / ("seed-" + std::to_string(seed));
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

/// Writes pri.csv, cpi.csv, track.csv and summary.json (plus any exported
/// maps) under <out>/<scenario>/<policy>/seed-<k>/.
inline fs::path write_episode(const EpisodeLog& log) {
  const fs::path dir = episode_dir(log.config, log.seed);
  fs::create_directories(dir);
  write_text(dir / "pri.csv", pri_csv(log));
  write_text(dir / "cpi.csv", cpi_csv(log));
  if (log.config.tracker.enabled && !log.cpi.empty()) {
    std::vector<TrackLogRow> rows;
    for (const auto& c : log.cpi)
      rows.push_back({c.cpi_index, c.truth_range, c.est_range, c.est_rate, c.p11, c.p12, c.p22, c.chosen_T,
                      c.chosen_alpha});
    write_track_csv(rows, (dir / "track.csv").string());
  }
  json summary = log.summary.to_json();
  summary["config"] = to_json(log.config);
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  for (const auto& [k, map] : log.exported_maps) {
    const std::string stem = (dir / ("map-" + std::to_string(k))).string();
    write_map_csv(map, stem + ".csv");
    write_map_float32(map, stem + ".f32");
  }
  return dir;
}

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;
  double ci95 = 0.0;
  std::size_t n = 0;

  static Aggregate of(std::span<const double> xs) {
    Aggregate a;
    a.n = xs.size();
    if (xs.empty()) return a;
    a.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(a.n);
    if (a.n > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - a.mean) * (x - a.mean);
      a.sd = std::sqrt(ss / static_cast<double>(a.n - 1));
      a.ci95 = 1.96 * a.sd / std::sqrt(static_cast<double>(a.n));
    }
    return a;
  }

  json to_json() const { return {{"mean", mean}, {"sd", sd}, {"ci95", ci95}, {"n", n}}; }
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EpisodeSummary summary;
  std::vector<double> running_cost;    // at curve points
  std::vector<double> running_regret;  // at curve points
  std::vector<double> running_pd;      // per CPI
  std::vector<double> running_rmse;    // per CPI
};

struct CampaignResult {
  ExperimentConfig config;
  std::vector<SeedOutcome> seeds;
  std::vector<std::size_t> curve_t;
  json summary;

  /// Successful seeds' value of one summary field.
  std::vector<double> metric(double EpisodeSummary::*field) const {
    std::vector<double> out;
    for (const auto& s : seeds)
      if (s.ok) out.push_back(s.summary.*field);
    return out;
  }
};

namespace detail {

inline SeedOutcome outcome_of(const EpisodeLog& log, std::span<const std::size_t> curve_t) {
  SeedOutcome o;
  o.seed = log.seed;
  o.ok = true;
  o.summary = log.summary;
  double sum = 0.0;
  std::size_t next = 0;
  for (const auto& r : log.pri) {
    sum += r.cost;
    if (next < curve_t.size() && r.t == curve_t[next]) {
      o.running_cost.push_back(sum / static_cast<double>(r.t));
      o.running_regret.push_back(r.cumulative_regret);
      ++next;
    }
  }
  double det = 0.0, se = 0.0;
  for (std::size_t k = 0; k < log.cpi.size(); ++k) {
    det += log.cpi[k].detected;
    const double e = log.cpi[k].est_range - log.cpi[k].truth_range;
    se += e * e;
    o.running_pd.push_back(det / static_cast<double>(k + 1));
    o.running_rmse.push_back(std::sqrt(se / static_cast<double>(k + 1)));
  }
  return o;
}

}  // namespace detail

/// Runs every seed (in a worker pool), writes each episode and the campaign
/// aggregates. A failing seed is reported and the rest continue.
inline CampaignResult run_campaign(const ExperimentConfig& cfg, bool write = true) {
  cfg.validate();
  CampaignResult result;
  result.config = cfg;
  for (std::size_t t = cfg.curve_stride; t <= cfg.horizon; t += cfg.curve_stride) result.curve_t.push_back(t);
  if (result.curve_t.empty() || result.curve_t.back() != cfg.horizon) result.curve_t.push_back(cfg.horizon);

  result.seeds.resize(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      SeedOutcome& o = result.seeds[i];
      o.seed = cfg.seeds[i];
      try {
        const EpisodeLog log = run_episode(cfg, cfg.seeds[i]);
        if (write) write_episode(log);
        o = detail::outcome_of(log, result.curve_t);
      } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
      }
    }
  };
  unsigned n_workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : std::thread::hardware_concurrency();
  n_workers = std::clamp<unsigned>(n_workers, 1, static_cast<unsigned>(cfg.seeds.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  json per_seed = json::array();
  for (const auto& s : result.seeds) {
    json e{{"seed", s.seed}, {"ok", s.ok}};
    if (s.ok)
      e["summary"] = s.summary.to_json();
    else
      e["error"] = s.error;
    per_seed.push_back(std::move(e));
  }
  json agg;
  const std::pair<const char*, double EpisodeSummary::*> fields[] = {
      {"average_cost", &EpisodeSummary::average_cost},
      {"average_oracle_cost", &EpisodeSummary::average_oracle_cost},
      {"cumulative_regret", &EpisodeSummary::cumulative_regret},
      {"pd", &EpisodeSummary::pd},
      {"mean_image_sinr_db", &EpisodeSummary::mean_image_sinr_db},
      {"mean_peak_sidelobe_db", &EpisodeSummary::mean_peak_sidelobe_db},
      {"rmse_m", &EpisodeSummary::rmse_m}};
  for (const auto& [name, field] : fields) agg[name] = Aggregate::of(result.metric(field)).to_json();
  const auto failed = std::count_if(result.seeds.begin(), result.seeds.end(), [](const auto& s) { return !s.ok; });
  result.summary = {{"scenario", to_string(cfg.scenario)},
                    {"policy", to_string(cfg.policy)},
                    {"d_hat", cfg.d_hat ? json(*cfg.d_hat) : json("none")},
                    {"horizon", cfg.horizon},
                    {"seeds", per_seed},
                    {"failed", failed},
                    {"aggregate", agg}};

  if (write) {
    const fs::path dir = fs::path(cfg.out) / to_string(cfg.scenario) / to_string(cfg.policy);
    fs::create_directories(dir);
    json summary = result.summary;
    summary["config"] = to_json(cfg);
    write_text(dir / "campaign.json", summary.dump(2) + "\n");

    auto column = [&](std::size_t k, std::vector<double> SeedOutcome::*curve) {
      std::vector<double> xs;
      for (const auto& s : result.seeds)
        if (s.ok && k < (s.*curve).size()) xs.push_back((s.*curve)[k]);
      return Aggregate::of(xs);
    };
    std::string curves = "t,avg_cost_mean,avg_cost_ci95,regret_mean,regret_ci95\n";
    for (std::size_t k = 0; k < result.curve_t.size(); ++k) {
      const auto c = column(k, &SeedOutcome::running_cost);
      const auto r = column(k, &SeedOutcome::running_regret);
      curves += std::to_string(result.curve_t[k]) + ',' + detail::fmt(c.mean) + ',' + detail::fmt(c.ci95) + ',' +
                detail::fmt(r.mean) + ',' + detail::fmt(r.ci95) + '\n';
    }
    write_text(dir / "curves.csv", curves);

    std::size_t cpis = 0;
    for (const auto& s : result.seeds) cpis = std::max(cpis, s.running_pd.size());
    if (cpis) {
      std::string cc = "cpi_index,pd_mean,pd_ci95,rmse_mean,rmse_ci95\n";
      for (std::size_t k = 0; k < cpis; ++k) {
        const auto p = column(k, &SeedOutcome::running_pd);
        const auto r = column(k, &SeedOutcome::running_rmse);
        cc += std::to_string(k) + ',' + detail::fmt(p.mean) + ',' + detail::fmt(p.ci95) + ',' +
              detail::fmt(r.mean) + ',' + detail::fmt(r.ci95) + '\n';
      }
      write_text(dir / "cpi_curves.csv", cc);
    }
  }
  return result;
}

struct SweepRow {
  std::optional<double> d_hat;
  double terminal_average_cost = 0.0;
  double peak_sidelobe_db = 0.0;
  std::size_t seeds_ok = 0;
};

/// One campaign per distortion bound, each under <out>/dhat-<v>/. Rows are
/// sorted by d_hat with the unconstrained run last.
inline std::vector<SweepRow> sweep_dhat(const ExperimentConfig& cfg, std::vector<std::optional<double>> values,
                                        bool write = true) {
  if (values.size() < 2) throw ConfigError("d_hat", "a sweep needs at least two values");
  std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    if (!a) return false;
    if (!b) return true;
    return *a < *b;
  });
  std::vector<SweepRow> rows;
  for (const auto& v : values) {
    ExperimentConfig c = cfg;
    c.d_hat = v;
    std::ostringstream label;
    if (v)
      label << "dhat-" << *v;
    else
      label << "dhat-none";
    c.out = (fs::path(cfg.out) / label.str()).string();
    const CampaignResult r = run_campaign(c, write);
    SweepRow row;
    row.d_hat = v;
    const auto costs = r.metric(&EpisodeSummary::average_cost);
    row.seeds_ok = costs.size();
    row.terminal_average_cost = Aggregate::of(costs).mean;
    row.peak_sidelobe_db = Aggregate::of(r.metric(&EpisodeSummary::mean_peak_sidelobe_db)).mean;
    rows.push_back(row);
  }
  if (write) {
    fs::create_directories(cfg.out);
    std::string csv = "d_hat,terminal_average_cost,peak_sidelobe_db,seeds_ok\n";
    for (const auto& r : rows)
      csv += (r.d_hat ? detail::fmt(*r.d_hat) : std::string("none")) + ',' + detail::fmt(r.terminal_average_cost) +
             ',' + detail::fmt(r.peak_sidelobe_db) + ',' + std::to_string(r.seeds_ok) + '\n';
    write_text(fs::path(cfg.out) / "sweep.csv", csv);
  }
  return rows;
}

inline std::vector<PriRow> read_pri_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  std::vector<PriRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 8) throw ConfigError("", "malformed pri.csv row: " + line);
    rows.push_back({std::stoull(f[0]), f[1], f[2], std::stoi(f[3]), std::stod(f[4]), std::stod(f[5]),
                    std::stod(f[6]), std::stod(f[7])});
  }
  return rows;
}

/// Re-derives costs, oracle costs and regret from a stored episode directory
/// (pri.csv plus the config embedded in summary.json) and compares them with
/// the logged values.
inline json replay(const fs::path& dir) {
  std::ifstream is(dir / "summary.json");
  if (!is) throw ConfigError("", "cannot open " + (dir / "summary.json").string());
  const json summary = json::parse(is);
  const ExperimentConfig cfg = config_from_json(summary.at("config"));
  const auto rows = read_pri_csv(dir / "pri.csv");

  double regret = 0.0, cost_sum = 0.0, increment_sum = 0.0;
  double max_cost_err = 0.0, max_oracle_err = 0.0;
  bool monotone = true;
  const bool radar = cfg.scenario != Scenario::synthetic_linear;
  const bool check_oracle = radar && cfg.tracker.coupling != TrackerCoupling::direct;
  std::optional<WaveformCatalog> catalog;
  CostParams params;
  if (radar) {
    catalog.emplace(cfg.catalog.build());
    params = cfg.cost.resolve(catalog->channel_bandwidth());
  }
  std::optional<Waveform> previous;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.t != i + 1) monotone = false;
    cost_sum += r.cost;
    increment_sum += r.regret_increment;
    if (radar) {
      const auto truth = InterferenceState::from_string(r.truth);
      const auto costs = cost_table(truth, params, *catalog);
      max_cost_err = std::max(max_cost_err, std::abs(costs.at(static_cast<std::size_t>(r.waveform_id)) - r.cost));
      if (check_oracle) {
        double oracle = std::numeric_limits<double>::infinity();
        if (cfg.is_learner() && cfg.d_hat && previous) {
          for (const auto& w : constrained_catalog(*catalog, *previous, *cfg.d_hat))
            oracle = std::min(oracle, costs[static_cast<std::size_t>(w.id)]);
        } else {
          oracle = *std::min_element(costs.begin(), costs.end());
        }
        max_oracle_err = std::max(max_oracle_err, std::abs(oracle - r.oracle_cost));
        regret += costs[static_cast<std::size_t>(r.waveform_id)] - oracle;
      }
      previous = catalog->at(r.waveform_id);
    }
  }
  const double logged_regret = rows.empty() ? 0.0 : rows.back().cumulative_regret;
  const double tol = 1e-9 * std::max(1.0, std::abs(logged_regret));
  const bool ledger_ok = std::abs(increment_sum - logged_regret) <= tol;
  const bool regret_ok = !check_oracle || std::abs(regret - logged_regret) <= tol;
  json out{{"rows", rows.size()},
           {"monotone_t", monotone},
           {"rows_match_horizon", rows.size() == cfg.horizon},
           {"average_cost", rows.empty() ? 0.0 : cost_sum / static_cast<double>(rows.size())},
           {"logged_cumulative_regret", logged_regret},
           {"sum_of_increments", increment_sum},
           {"max_cost_error", max_cost_err},
           {"max_oracle_error", max_oracle_err},
           {"oracle_checked", check_oracle}};
  if (check_oracle) out["recomputed_cumulative_regret"] = regret;
  out["consistent"] = monotone && rows.size() == cfg.horizon && ledger_ok && regret_ok && max_cost_err == 0.0 &&
                      max_oracle_err == 0.0;
  return out;
}

}  // namespace cradar
