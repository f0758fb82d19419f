#pragma once

// Interference-channel generators: cellular coexistence, the reactive jammer,
// and a synthetic stationary linear-cost environment for learner checks.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cradar/errors.hpp"
#include "cradar/rng.hpp"
#include "cradar/spectrum.hpp"
#include "cradar/waveforms.hpp"

namespace cradar {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

struct CoexistenceConfig {
  int num_bs = 90;
  double bs_power_dbm_min = 40.0;
  double bs_power_dbm_max = 46.5;
  double bs_distance_km_min = 5.0;
  double bs_distance_km_max = 6.0;
  double path_loss_exp = 3.5;
  double intf_bandwidth_hz = 20e6;
  double radar_rx_gain = 1.0;
  double shadow_mean = 0.0;  // nepers
  double shadow_std = 1.0;   // nepers
  /// Lag-one correlation of each BS's shadowing across PRIs; 0 draws
  /// independently every PRI.
  double shadow_correlation = 0.0;
  double p_on = 0.1;
  double p_off = 0.3;
  /// Harmful-interference threshold I. Calibrated at construction when unset.
  std::optional<double> threshold_dbm;
  double target_occupancy = 0.45;
  int calibration_steps = 2000;

  void validate(const std::string& path = "scene.coexistence") const {
    if (num_bs < 0) throw ConfigError(path + ".num_bs", "must be non-negative");
    if (!(bs_power_dbm_min <= bs_power_dbm_max))
      throw ConfigError(path + ".bs_power_dbm_min", "must not exceed bs_power_dbm_max");
    if (!(bs_distance_km_min > 0.0 && bs_distance_km_min <= bs_distance_km_max))
      throw ConfigError(path + ".bs_distance_km_min", "must be positive and <= bs_distance_km_max");
    if (!(path_loss_exp > 0.0)) throw ConfigError(path + ".path_loss_exp", "must be positive");
    if (!(intf_bandwidth_hz > 0.0)) throw ConfigError(path + ".intf_bandwidth_hz", "must be positive");
    if (!(radar_rx_gain > 0.0)) throw ConfigError(path + ".radar_rx_gain", "must be positive");
    if (!(shadow_std >= 0.0)) throw ConfigError(path + ".shadow_std", "must be non-negative");
    if (!(shadow_correlation >= 0.0 && shadow_correlation < 1.0))
      throw ConfigError(path + ".shadow_correlation", "must be in [0, 1)");
    if (!(p_on >= 0.0 && p_on <= 1.0)) throw ConfigError(path + ".p_on", "must be in [0, 1]");
    if (!(p_off >= 0.0 && p_off <= 1.0)) throw ConfigError(path + ".p_off", "must be in [0, 1]");
    if (p_on + p_off <= 0.0) throw ConfigError(path + ".p_on", "p_on + p_off must be positive");
    if (!(target_occupancy > 0.0 && target_occupancy < 1.0))
      throw ConfigError(path + ".target_occupancy", "must be in (0, 1)");
    if (calibration_steps < 1) throw ConfigError(path + ".calibration_steps", "must be positive");
  }
};

/// Cellular base stations sharing the channel. Each BS holds a fixed power,
/// distance and contiguous sub-channel block, and switches on and off as a
/// two-state Markov chain. Evolution never depends on the radar's actions.
class CoexistenceScene {
 public:
  struct BaseStation {
    double power_w = 0.0;
    double distance_m = 0.0;
    int first_subchannel = 0;
    int span = 1;
    bool active = false;
    double shadow = 0.0;
  };

  /// `setup` draws placements and runs threshold calibration; it is not used
  /// afterwards.
  CoexistenceScene(const CoexistenceConfig& config, double channel_bandwidth_hz,
                   int num_subchannels, Rng& setup)
      : config_(config), num_subchannels_(num_subchannels) {
    config_.validate();
    const double width = channel_bandwidth_hz / num_subchannels;
    const int span = std::clamp(static_cast<int>(std::lround(config_.intf_bandwidth_hz / width)), 1,
                                num_subchannels);
    const double p_active = config_.p_on / (config_.p_on + config_.p_off);
    stations_.resize(static_cast<std::size_t>(config_.num_bs));
    for (auto& bs : stations_) {
      bs.power_w = dbm_to_watts(setup.uniform(config_.bs_power_dbm_min, config_.bs_power_dbm_max));
      bs.distance_m = 1e3 * setup.uniform(config_.bs_distance_km_min, config_.bs_distance_km_max);
      bs.span = span;
      bs.first_subchannel =
          static_cast<int>(setup.uniform_index(static_cast<std::uint64_t>(num_subchannels - span + 1)));
      bs.active = setup.bernoulli(p_active);
      bs.shadow = config_.shadow_mean + config_.shadow_std * setup.normal();
    }
    powers_.assign(static_cast<std::size_t>(num_subchannels), 0.0);
    if (config_.threshold_dbm) {
      threshold_w_ = dbm_to_watts(*config_.threshold_dbm);
    } else {
      calibrate(setup);
    }
  }

  /// Advances activity, redraws shadowing, thresholds aggregate power.
  InterferenceState step(Rng& rng) { return advance(stations_, rng); }

  double threshold_w() const { return threshold_w_; }
  double threshold_dbm() const { return watts_to_dbm(threshold_w_); }
  /// Aggregate received power per sub-channel from the latest step.
  const std::vector<double>& subchannel_powers() const { return powers_; }
  const std::vector<BaseStation>& stations() const { return stations_; }
  const CoexistenceConfig& config() const { return config_; }

  /// P * G_r * d^-psi * exp(X).
  double received_power(const BaseStation& bs) const {
    return bs.power_w * config_.radar_rx_gain * std::pow(bs.distance_m, -config_.path_loss_exp) *
           std::exp(bs.shadow);
  }

 private:
  InterferenceState advance(std::vector<BaseStation>& stations, Rng& rng) {
    std::fill(powers_.begin(), powers_.end(), 0.0);
    const double rho = config_.shadow_correlation;
    const double innovation = config_.shadow_std * std::sqrt(1.0 - rho * rho);
    for (auto& bs : stations) {
      const double u = rng.uniform();
      bs.active = bs.active ? !(u < config_.p_off) : (u < config_.p_on);
      const double z = rng.normal();
      bs.shadow = rho == 0.0 ? config_.shadow_mean + config_.shadow_std * z
                             : config_.shadow_mean + rho * (bs.shadow - config_.shadow_mean) +
                                   innovation * z;
      if (!bs.active) continue;
      const double p = received_power(bs);
      for (int l = bs.first_subchannel; l < bs.first_subchannel + bs.span; ++l)
        powers_[static_cast<std::size_t>(l)] += p;
    }
    InterferenceState s(num_subchannels_);
    for (int l = 0; l < num_subchannels_; ++l)
      if (powers_[static_cast<std::size_t>(l)] > threshold_w_) s.set(l);
    return s;
  }

  // Sets I at the (1 - target) quantile of per-sub-channel aggregate power over
  // a calibration run on a copy of the stations.
  void calibrate(Rng& rng) {
    auto shadow_copy = stations_;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(config_.calibration_steps * num_subchannels_));
    threshold_w_ = std::numeric_limits<double>::infinity();
    for (int t = 0; t < config_.calibration_steps; ++t) {
      advance(shadow_copy, rng);
      samples.insert(samples.end(), powers_.begin(), powers_.end());
    }
    const auto k = static_cast<std::size_t>(
        std::clamp((1.0 - config_.target_occupancy) * static_cast<double>(samples.size()), 0.0,
                   static_cast<double>(samples.size() - 1)));
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k), samples.end());
    threshold_w_ = samples[k];
    if (!(threshold_w_ > 0.0)) threshold_w_ = std::numeric_limits<double>::min();
    std::fill(powers_.begin(), powers_.end(), 0.0);
  }

  CoexistenceConfig config_;
  int num_subchannels_;
  std::vector<BaseStation> stations_;
  std::vector<double> powers_;
  double threshold_w_ = 0.0;
};

struct JammerConfig {
  double jnr_db = 20.0;

  void validate(const std::string& path = "scene.jammer") const {
    if (!std::isfinite(jnr_db)) throw ConfigError(path + ".jnr_db", "must be finite");
  }
};

/// Reactive jammer. If the radar repeated its waveform (w_{t-1} == w_{t-2}) the
/// jammer moves onto the sub-channels that waveform occupies; otherwise it
/// stays on the band it used in the previous PRI. No jamming until two PRIs of
/// history exist.
inline InterferenceState jammer_step(const std::optional<Waveform>& previous,
                                     const std::optional<Waveform>& before_previous,
                                     const InterferenceState& previous_jammed,
                                     const WaveformCatalog& catalog) {
  if (!previous || !before_previous) return InterferenceState(catalog.num_subchannels());
  if (previous->id == before_previous->id)
    return InterferenceState(catalog.num_subchannels(), catalog.occupancy_mask(previous->id));
  return previous_jammed;
}

struct SyntheticLinearConfig {
  int num_arms = 16;
  int dim = 3;
  /// Noise is uniform on [-h, h], which is h^2-subgaussian; h <= 1 keeps it
  /// 1-subgaussian.
  double noise_halfwidth = 0.25;

  void validate(const std::string& path = "scene.synthetic") const {
    if (num_arms < 2) throw ConfigError(path + ".num_arms", "must be at least 2");
    if (dim < 2) throw ConfigError(path + ".dim", "must be at least 2");
    if (!(noise_halfwidth >= 0.0 && noise_halfwidth <= 0.25))
      throw ConfigError(path + ".noise_halfwidth", "must be in [0, 0.25]");
  }
};

/// Stationary linear cost C = <theta, x> + eta. Contexts are (1, u_2, ..., u_d)
/// with u ~ U[0,1]; theta_1 = 0.25 and the remaining weights are non-negative
/// with sum 0.5, so expected costs lie in [0.25, 0.75] and realized costs in
/// [0, 1].
class SyntheticLinearEnv {
 public:
  SyntheticLinearEnv(const SyntheticLinearConfig& config, Rng& setup) : config_(config) {
    config_.validate();
    theta_ = Eigen::VectorXd::Zero(config_.dim);
    theta_[0] = 0.25;
    double total = 0.0;
    for (int i = 1; i < config_.dim; ++i) {
      theta_[i] = -std::log(1.0 - setup.uniform());  // exponential -> Dirichlet(1, ..., 1)
      total += theta_[i];
    }
    for (int i = 1; i < config_.dim; ++i) theta_[i] *= 0.5 / total;
  }

  const Eigen::VectorXd& theta() const { return theta_; }
  const SyntheticLinearConfig& config() const { return config_; }

  std::vector<Eigen::VectorXd> contexts(Rng& rng) const {
    std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(config_.num_arms));
    for (auto& x : out) {
      x.resize(config_.dim);
      x[0] = 1.0;
      for (int i = 1; i < config_.dim; ++i) x[i] = rng.uniform();
    }
    return out;
  }

  double expected_cost(const Eigen::VectorXd& x) const { return theta_.dot(x); }

  double realize(const Eigen::VectorXd& x, Rng& rng) const {
    return expected_cost(x) + rng.uniform(-config_.noise_halfwidth, config_.noise_halfwidth);
  }

 private:
  SyntheticLinearConfig config_;
  Eigen::VectorXd theta_;
};

}  // namespace cradar
