#pragma once

// LFM waveform catalog, the inter-waveform distortion metric and the per-PRI
// constrained sub-catalog.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cradar/errors.hpp"

namespace cradar {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kDefaultCarrierHz = 3.0e9;

/// One LFM chirp. `center_freq_hz` is an offset inside the shared channel
/// [0, B]; the chirp sweeps `bandwidth_hz` over `pulse_duration_s`.
struct Waveform {
  int id = 0;
  double center_freq_hz = 0.0;
  double bandwidth_hz = 0.0;
  double pulse_duration_s = 0.0;
  double amplitude = 1.0;

  double chirp_rate() const { return bandwidth_hz / pulse_duration_s; }

  friend bool operator==(const Waveform&, const Waveform&) = default;
};

/// How a waveform's (center, bandwidth) maps to an occupied interval.
enum class OccupancyConvention {
  centered,  ///< [f - BW/2, f + BW/2]
  literal,   ///< [f - BW, f + BW]
};

struct Band {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double f) const { return f >= lo && f <= hi; }
};

inline Band occupied_band(const Waveform& w, OccupancyConvention convention) {
  const double half = convention == OccupancyConvention::centered ? 0.5 * w.bandwidth_hz
                                                                  : w.bandwidth_hz;
  return {w.center_freq_hz - half, w.center_freq_hz + half};
}

/// Weights of the squared (frequency, bandwidth) distance, held as their
/// reciprocals so grid distances divide exactly: D = df^2/s1 + dbw^2/s2.
struct DistortionWeights {
  double scale1 = 1.0;  // Hz^2
  double scale2 = 1.0;  // Hz^2

  /// 1/(2B^2) each, which keeps the distortion of any in-band pair in [0, 1].
  static DistortionWeights for_channel(double channel_bandwidth_hz) {
    const double s = 2.0 * channel_bandwidth_hz * channel_bandwidth_hz;
    return {s, s};
  }
};

inline double distortion(const Waveform& a, const Waveform& b, const DistortionWeights& weights) {
  const double df = a.center_freq_hz - b.center_freq_hz;
  const double dbw = a.bandwidth_hz - b.bandwidth_hz;
  if (weights.scale1 == weights.scale2) return (df * df + dbw * dbw) / weights.scale1;
  return df * df / weights.scale1 + dbw * dbw / weights.scale2;
}

/// Finite indexed set of waveforms sharing one channel of bandwidth B split
/// into S equal sub-channels. Ids are contiguous from zero, so `at(id)` is an
/// index. Immutable after construction.
class WaveformCatalog {
 public:
  static constexpr int kMaxSubchannels = 64;

  WaveformCatalog(std::vector<Waveform> waveforms, double channel_bandwidth_hz,
                  int num_subchannels,
                  OccupancyConvention convention = OccupancyConvention::centered,
                  double carrier_hz = kDefaultCarrierHz)
      : waveforms_(std::move(waveforms)),
        channel_bandwidth_(channel_bandwidth_hz),
        num_subchannels_(num_subchannels),
        convention_(convention),
        carrier_(carrier_hz) {
    validate();
    masks_.reserve(waveforms_.size());
    for (const auto& w : waveforms_) masks_.push_back(compute_mask(w));
  }

  std::size_t size() const { return waveforms_.size(); }
  const Waveform& at(int id) const { return waveforms_.at(static_cast<std::size_t>(id)); }
  const Waveform& operator[](std::size_t i) const { return waveforms_[i]; }
  std::span<const Waveform> waveforms() const { return waveforms_; }
  auto begin() const { return waveforms_.begin(); }
  auto end() const { return waveforms_.end(); }

  double channel_bandwidth() const { return channel_bandwidth_; }
  int num_subchannels() const { return num_subchannels_; }
  double subchannel_width() const { return channel_bandwidth_ / num_subchannels_; }
  OccupancyConvention convention() const { return convention_; }
  double carrier_hz() const { return carrier_; }

  /// Center of sub-channel `l` (0-based), i.e. (l+1)B/S - B/(2S).
  double subchannel_center(int l) const {
    const double b = channel_bandwidth_;
    const double s = num_subchannels_;
    return (l + 1) * b / s - b / (2.0 * s);
  }

  Band band(const Waveform& w) const { return occupied_band(w, convention_); }

  /// Bit l set when sub-channel l's center lies in the waveform's occupied band.
  std::uint64_t occupancy_mask(int id) const { return masks_.at(static_cast<std::size_t>(id)); }

  DistortionWeights default_distortion() const {
    return DistortionWeights::for_channel(channel_bandwidth_);
  }

  /// Widest waveform; lowest id among equals.
  const Waveform& widest() const {
    const Waveform* best = &waveforms_.front();
    for (const auto& w : waveforms_)
      if (w.bandwidth_hz > best->bandwidth_hz) best = &w;
    return *best;
  }

  /// Regular grid: bandwidths step, 2*step, ..., B; each placed at every
  /// multiple of `step` that keeps the centered band inside [0, B]. Ordered by
  /// bandwidth, then center.
  static WaveformCatalog grid(double channel_bandwidth_hz = 100e6, int num_subchannels = 10,
                              double step_hz = 10e6, double pulse_duration_s = 0.5e-6,
                              OccupancyConvention convention = OccupancyConvention::centered,
                              double carrier_hz = kDefaultCarrierHz) {
    if (!(step_hz > 0.0)) throw ConfigError("catalog.step_hz", "must be positive");
    const auto steps = static_cast<int>(std::llround(channel_bandwidth_hz / step_hz));
    if (steps < 1 || std::abs(steps * step_hz - channel_bandwidth_hz) > 1e-6 * channel_bandwidth_hz)
      throw ConfigError("catalog.step_hz", "must divide the channel bandwidth");
    std::vector<Waveform> out;
    for (int k = 1; k <= steps; ++k) {
      const double bw = k * step_hz;
      for (int start = 0; start + k <= steps; ++start) {
        Waveform w;
        w.id = static_cast<int>(out.size());
        w.bandwidth_hz = bw;
        w.center_freq_hz = start * step_hz + 0.5 * bw;
        w.pulse_duration_s = pulse_duration_s;
        out.push_back(w);
      }
    }
    return WaveformCatalog(std::move(out), channel_bandwidth_hz, num_subchannels, convention,
                           carrier_hz);
  }

 private:
  void validate() const {
    if (!(channel_bandwidth_ > 0.0))
      throw ConfigError("catalog.channel_bandwidth_hz", "must be positive");
    if (num_subchannels_ < 1 || num_subchannels_ > kMaxSubchannels)
      throw ConfigError("catalog.num_subchannels", "must be in [1, 64]");
    if (waveforms_.size() < 2) throw ConfigError("catalog.waveforms", "need at least two waveforms");
    const double tol = 1e-9 * channel_bandwidth_;
    for (std::size_t i = 0; i < waveforms_.size(); ++i) {
      const auto& w = waveforms_[i];
      const std::string path = "catalog.waveforms[" + std::to_string(i) + "]";
      if (w.id != static_cast<int>(i))
        throw ConfigError(path + ".id", "ids must be distinct and contiguous from 0");
      if (!(w.bandwidth_hz > 0.0)) throw ConfigError(path + ".bandwidth_hz", "must be positive");
      if (!(w.pulse_duration_s > 0.0))
        throw ConfigError(path + ".pulse_duration_s", "must be positive");
      const double absolute_center = carrier_ + w.center_freq_hz - 0.5 * channel_bandwidth_;
      if (!(w.bandwidth_hz < absolute_center))
        throw ConfigError(path + ".bandwidth_hz", "violates the narrowband assumption");
      if (convention_ == OccupancyConvention::centered) {
        const Band b = occupied_band(w, convention_);
        if (b.lo < -tol || b.hi > channel_bandwidth_ + tol)
          throw ConfigError(path, "occupied band leaves the shared channel");
      }
    }
  }

  std::uint64_t compute_mask(const Waveform& w) const {
    const Band b = band(w);
    std::uint64_t mask = 0;
    for (int l = 0; l < num_subchannels_; ++l)
      if (b.contains(subchannel_center(l))) mask |= std::uint64_t{1} << l;
    return mask;
  }

  std::vector<Waveform> waveforms_;
  std::vector<std::uint64_t> masks_;
  double channel_bandwidth_;
  int num_subchannels_;
  OccupancyConvention convention_;
  double carrier_;
};

/// W' = { w in catalog : D(w, previous) < d_hat }, in catalog order. Always
/// contains `previous` for d_hat > 0.
inline std::vector<Waveform> constrained_catalog(const WaveformCatalog& catalog,
                                                 const Waveform& previous, double d_hat,
                                                 const DistortionWeights& weights) {
  std::vector<Waveform> out;
  for (const auto& w : catalog)
    if (distortion(w, previous, weights) < d_hat) out.push_back(w);
  return out;
}

inline std::vector<Waveform> constrained_catalog(const WaveformCatalog& catalog,
                                                 const Waveform& previous, double d_hat) {
  return constrained_catalog(catalog, previous, d_hat, catalog.default_distortion());
}

// JSON: {channel_bandwidth_hz, num_subchannels, waveforms: [{id, center_freq_hz,
// bandwidth_hz, pulse_duration_s}]}. `amplitude`, `carrier_hz` and
// `literal_occupancy` are optional and only written when not at their defaults.

inline nlohmann::json to_json(const WaveformCatalog& catalog) {
  nlohmann::json j;
  j["channel_bandwidth_hz"] = catalog.channel_bandwidth();
  j["num_subchannels"] = catalog.num_subchannels();
  auto& arr = j["waveforms"] = nlohmann::json::array();
  for (const auto& w : catalog) {
    nlohmann::json e{{"id", w.id},
                     {"center_freq_hz", w.center_freq_hz},
                     {"bandwidth_hz", w.bandwidth_hz},
                     {"pulse_duration_s", w.pulse_duration_s}};
    if (w.amplitude != 1.0) e["amplitude"] = w.amplitude;
    arr.push_back(std::move(e));
  }
  if (catalog.carrier_hz() != kDefaultCarrierHz) j["carrier_hz"] = catalog.carrier_hz();
  if (catalog.convention() == OccupancyConvention::literal) j["literal_occupancy"] = true;
  return j;
}

inline WaveformCatalog catalog_from_json(const nlohmann::json& j,
                                         const std::string& path = "catalog") {
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ConfigError(path + "." + key, "missing");
    return j.at(key);
  };
  try {
    const double bandwidth = require("channel_bandwidth_hz").get<double>();
    const int subchannels = require("num_subchannels").get<int>();
    std::vector<Waveform> ws;
    const auto& arr = require("waveforms");
    if (!arr.is_array()) throw ConfigError(path + ".waveforms", "must be an array");
    for (const auto& e : arr) {
      Waveform w;
      w.id = e.at("id").get<int>();
      w.center_freq_hz = e.at("center_freq_hz").get<double>();
      w.bandwidth_hz = e.at("bandwidth_hz").get<double>();
      w.pulse_duration_s = e.at("pulse_duration_s").get<double>();
      w.amplitude = e.value("amplitude", 1.0);
      ws.push_back(w);
    }
    const auto convention = j.value("literal_occupancy", false) ? OccupancyConvention::literal
                                                                : OccupancyConvention::centered;
    return WaveformCatalog(std::move(ws), bandwidth, subchannels, convention,
                           j.value("carrier_hz", kDefaultCarrierHz));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace cradar
