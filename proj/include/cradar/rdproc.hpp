#pragma once

// Pulse synthesis, point-target reception, matched filtering, range-Doppler
// imaging, 2D CA-CFAR and image metrics.
//
// Everything runs in complex baseband: the shared channel [0, B] maps to
// [-B/2, B/2], so a waveform centred at f sits at f - B/2. The carrier only
// enters through the pulse-to-pulse Doppler phase (stop-and-hop).

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cradar/errors.hpp"
#include "cradar/fft.hpp"
#include "cradar/rng.hpp"
#include "cradar/spectrum.hpp"
#include "cradar/waveforms.hpp"

namespace cradar {

/// Pulses are truncated at +-3T around their centre (the Gaussian envelope is
/// below 1.3e-4 there).
inline constexpr double kPulseHalfWidth = 3.0;

struct PointTarget {
  cplx gain{1.0, 0.0};
  double delay_s = 0.0;
  double velocity_mps = 0.0;  ///< range rate, positive when receding
};

enum class SlowTimeWindow { none, hann };

struct CfarConfig {
  int guard_range = 3;
  int guard_doppler = 2;
  int train_range = 8;
  int train_doppler = 4;
  double pfa = 1e-3;

  int training_cells() const {
    const int outer = (2 * (guard_range + train_range) + 1) * (2 * (guard_doppler + train_doppler) + 1);
    const int inner = (2 * guard_range + 1) * (2 * guard_doppler + 1);
    return outer - inner;
  }

  /// Square-law CA-CFAR multiplier N (pfa^(-1/N) - 1).
  double threshold_factor() const {
    const double n = training_cells();
    return n * (std::pow(pfa, -1.0 / n) - 1.0);
  }

  void validate(const std::string& path = "rdproc.cfar") const {
    if (guard_range < 0 || guard_doppler < 0)
      throw ConfigError(path + ".guard_range", "guard cells must be non-negative");
    if (train_range < 0 || train_doppler < 0)
      throw ConfigError(path + ".train_range", "training cells must be non-negative");
    if (training_cells() <= 0) throw ConfigError(path, "window has no training cells");
    if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError(path + ".pfa", "must be in (0, 1)");
  }
};

struct RdConfig {
  double sample_rate_hz = 200e6;
  double pri_s = 409.6e-6;
  int num_pulses = 64;
  int range_bins = 1024;
  SlowTimeWindow window = SlowTimeWindow::hann;
  CfarConfig cfar;

  double range_bin_m() const { return kSpeedOfLight / (2.0 * sample_rate_hz); }
  double doppler_bin_hz() const { return 1.0 / (pri_s * num_pulses); }
  double cpi_duration_s() const { return pri_s * num_pulses; }

  void validate(const std::string& path = "rdproc") const {
    if (!(sample_rate_hz > 0.0)) throw ConfigError(path + ".sample_rate_hz", "must be positive");
    if (!(pri_s > 0.0)) throw ConfigError(path + ".pri_s", "must be positive");
    if (num_pulses < 2) throw ConfigError(path + ".num_pulses", "must be at least 2");
    if (range_bins < 1) throw ConfigError(path + ".range_bins", "must be positive");
    if (range_bins / sample_rate_hz > pri_s)
      throw ConfigError(path + ".range_bins", "range gate exceeds the PRI");
    cfar.validate(path + ".cfar");
    if (2 * (cfar.guard_range + cfar.train_range) + 1 > range_bins ||
        2 * (cfar.guard_doppler + cfar.train_doppler) + 1 > num_pulses)
      throw ConfigError(path + ".cfar", "window does not fit inside the map");
  }
};

inline double baseband_frequency(const Waveform& w, double channel_bandwidth_hz) {
  return w.center_freq_hz - 0.5 * channel_bandwidth_hz;
}

/// A exp(-t^2/T^2) exp(j(2 pi f t + pi alpha t^2)), t measured from the pulse
/// centre; zero beyond the truncation point.
inline cplx pulse_value(const Waveform& w, double baseband_hz, double t) {
  const double T = w.pulse_duration_s;
  if (std::abs(t) > kPulseHalfWidth * T) return {0.0, 0.0};
  const double envelope = w.amplitude * std::exp(-(t * t) / (T * T));
  const double phase = 2.0 * std::numbers::pi * baseband_hz * t +
                       std::numbers::pi * w.chirp_rate() * t * t;
  return std::polar(envelope, phase);
}

/// Samples from the pulse centre to its truncation edge.
inline int pulse_half_length(const Waveform& w, double sample_rate_hz) {
  return static_cast<int>(std::ceil(kPulseHalfWidth * w.pulse_duration_s * sample_rate_hz));
}

inline void check_sample_rate(const Waveform& w, double sample_rate_hz, double channel_bandwidth_hz) {
  if (!(w.pulse_duration_s > 0.0)) throw DomainError("pulse duration must be positive");
  const double f = baseband_frequency(w, channel_bandwidth_hz);
  const double edge = std::max(std::abs(f - 0.5 * w.bandwidth_hz), std::abs(f + 0.5 * w.bandwidth_hz));
  if (sample_rate_hz < 2.0 * edge)
    throw ConfigError("rdproc.sample_rate_hz", "below twice the highest baseband band edge");
}

/// Sampled pulse of 2h+1 samples with the centre at index h.
inline std::vector<cplx> synthesize_pulse(const Waveform& w, double sample_rate_hz,
                                          double channel_bandwidth_hz) {
  check_sample_rate(w, sample_rate_hz, channel_bandwidth_hz);
  const int h = pulse_half_length(w, sample_rate_hz);
  const double f = baseband_frequency(w, channel_bandwidth_hz);
  std::vector<cplx> out(static_cast<std::size_t>(2 * h + 1));
  for (int n = -h; n <= h; ++n) out[static_cast<std::size_t>(n + h)] = pulse_value(w, f, n / sample_rate_hz);
  return out;
}

/// Sum |x|^2 / fs, the sampled approximation of the pulse energy.
inline double pulse_energy(std::span<const cplx> pulse, double sample_rate_hz) {
  double e = 0.0;
  for (const auto& v : pulse) e += std::norm(v);
  return e / sample_rate_hz;
}

/// Fast-time x slow-time samples of one CPI, pulse-major.
struct CpiBuffer {
  int num_pulses = 0;
  int samples_per_pulse = 0;
  double sample_rate_hz = 0.0;
  double pri_s = 0.0;
  std::vector<int> waveform_ids;
  std::vector<cplx> samples;

  cplx* pulse(int m) { return samples.data() + static_cast<std::size_t>(m) * samples_per_pulse; }
  const cplx* pulse(int m) const {
    return samples.data() + static_cast<std::size_t>(m) * samples_per_pulse;
  }
};

/// Complex pulses x range-bins matrix, pulse-major.
struct SlowTimeMatrix {
  int num_pulses = 0;
  int range_bins = 0;
  std::vector<cplx> data;

  cplx& at(int m, int r) { return data[static_cast<std::size_t>(m) * range_bins + r]; }
  const cplx& at(int m, int r) const { return data[static_cast<std::size_t>(m) * range_bins + r]; }
};

/// Magnitude image. Doppler bin d corresponds to (d - doppler_bins/2) times
/// `doppler_bin_hz`, so zero Doppler sits at the centre column.
struct RangeDopplerMap {
  int range_bins = 0;
  int doppler_bins = 0;
  double range_bin_m = 0.0;
  double doppler_bin_hz = 0.0;
  double carrier_hz = kDefaultCarrierHz;
  std::vector<double> values;  // index d * range_bins + r

  double& at(int r, int d) { return values[static_cast<std::size_t>(d) * range_bins + r]; }
  double at(int r, int d) const { return values[static_cast<std::size_t>(d) * range_bins + r]; }

  int zero_doppler_bin() const { return doppler_bins / 2; }
  double doppler_hz(int d) const { return (d - zero_doppler_bin()) * doppler_bin_hz; }
  /// Range rate of a Doppler bin; receding targets have negative Doppler.
  double range_rate(int d) const { return -doppler_hz(d) * kSpeedOfLight / (2.0 * carrier_hz); }
  double range_m(int r) const { return r * range_bin_m; }

  /// Nearest Doppler bin of a range rate, aliased into [0, doppler_bins).
  int doppler_bin_of(double range_rate_mps) const {
    const double fd = -2.0 * range_rate_mps * carrier_hz / kSpeedOfLight;
    const long k = std::lround(fd / doppler_bin_hz) + zero_doppler_bin();
    const long m = doppler_bins;
    return static_cast<int>(((k % m) + m) % m);
  }
  int range_bin_of(double range_m) const { return static_cast<int>(std::lround(range_m / range_bin_m)); }

  std::vector<double> doppler_profile(int r) const {
    std::vector<double> out(static_cast<std::size_t>(doppler_bins));
    for (int d = 0; d < doppler_bins; ++d) out[static_cast<std::size_t>(d)] = at(r, d);
    return out;
  }
};

inline std::vector<double> slow_time_window(SlowTimeWindow window, int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (window == SlowTimeWindow::hann && n > 1)
    for (int m = 0; m < n; ++m)
      w[static_cast<std::size_t>(m)] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * m / (n - 1)));
  return w;
}

/// Windowed slow-time DFT of every range bin, in place, followed by an
/// fftshift so zero Doppler lands at the centre.
inline void doppler_process(SlowTimeMatrix& x, SlowTimeWindow window) {
  const auto w = slow_time_window(window, x.num_pulses);
  if (window != SlowTimeWindow::none)
    for (int m = 0; m < x.num_pulses; ++m)
      for (int r = 0; r < x.range_bins; ++r) x.at(m, r) *= w[static_cast<std::size_t>(m)];
  fft_many(x.data.data(), x.data.data(), x.num_pulses, x.range_bins, x.range_bins, 1);
  const int half = x.num_pulses / 2;
  if (half == 0) return;
  std::vector<cplx> shifted(x.data.size());
  for (int m = 0; m < x.num_pulses; ++m) {
    const int to = (m + half) % x.num_pulses;
    std::copy_n(&x.at(m, 0), x.range_bins, shifted.data() + static_cast<std::size_t>(to) * x.range_bins);
  }
  x.data.swap(shifted);
}

/// Holds the catalog's matched-filter replicas and runs reception and
/// imaging for one radar configuration. Immutable after construction.
class RangeDopplerProcessor {
 public:
  RangeDopplerProcessor(const RdConfig& config, const WaveformCatalog& catalog)
      : config_(config), catalog_(catalog) {
    config_.validate();
    for (const auto& w : catalog_) {
      check_sample_rate(w, config_.sample_rate_hz, catalog_.channel_bandwidth());
      half_ = std::max(half_, pulse_half_length(w, config_.sample_rate_hz));
    }
    samples_per_pulse_ = config_.range_bins + 2 * half_;
    fft_size_ = static_cast<int>(std::bit_ceil(static_cast<unsigned>(samples_per_pulse_)));
    replicas_.reserve(catalog_.size());
    for (const auto& w : catalog_) replicas_.push_back(make_replica(w));
  }

  const RdConfig& config() const { return config_; }
  const WaveformCatalog& catalog() const { return catalog_; }
  int samples_per_pulse() const { return samples_per_pulse_; }
  int fft_size() const { return fft_size_; }
  /// Offset of the transmitted pulse centre from the start of the PRI.
  double pulse_center_s() const { return half_ / config_.sample_rate_hz; }

  /// Sum of all targets' echoes plus band-limited interference on the marked
  /// sub-channels plus white noise. `interference` is empty or holds one state
  /// per pulse; `interference_power` is the per-sample power the interference
  /// would have if it filled the whole sampled band.
  CpiBuffer receive(std::span<const int> waveform_ids, std::span<const PointTarget> targets,
                    std::span<const InterferenceState> interference, double interference_power,
                    double noise_power, Rng& rng) const {
    const int M = static_cast<int>(waveform_ids.size());
    if (!interference.empty() && static_cast<int>(interference.size()) != M)
      throw ConfigError("", "one interference state per pulse is required");
    for (const auto& tg : targets)
      if (!(tg.delay_s >= 0.0 && tg.delay_s < config_.pri_s))
        throw DomainError("target delay must lie in [0, PRI)");
    CpiBuffer buf;
    buf.num_pulses = M;
    buf.samples_per_pulse = samples_per_pulse_;
    buf.sample_rate_hz = config_.sample_rate_hz;
    buf.pri_s = config_.pri_s;
    buf.waveform_ids.assign(waveform_ids.begin(), waveform_ids.end());
    buf.samples.assign(static_cast<std::size_t>(M) * samples_per_pulse_, cplx{});

    const double fs = config_.sample_rate_hz;
    const double fc = catalog_.carrier_hz();
    std::vector<cplx> spectrum;
    for (int m = 0; m < M; ++m) {
      const Waveform& w = catalog_.at(waveform_ids[static_cast<std::size_t>(m)]);
      const double fbb = baseband_frequency(w, catalog_.channel_bandwidth());
      cplx* x = buf.pulse(m);
      for (const auto& tg : targets) {
        const double tau = tg.delay_s + 2.0 * tg.velocity_mps * m * config_.pri_s / kSpeedOfLight;
        const cplx a = tg.gain * std::polar(1.0, -2.0 * std::numbers::pi * fc * tau);
        const double centre = pulse_center_s() + tau;
        const double reach = kPulseHalfWidth * w.pulse_duration_s;
        const int lo = std::max(0, static_cast<int>(std::ceil((centre - reach) * fs)));
        const int hi = std::min(samples_per_pulse_ - 1, static_cast<int>(std::floor((centre + reach) * fs)));
        for (int n = lo; n <= hi; ++n) x[n] += a * pulse_value(w, fbb, n / fs - centre);
      }
      if (!interference.empty() && interference_power > 0.0 &&
          interference[static_cast<std::size_t>(m)].any())
        add_interference(x, interference[static_cast<std::size_t>(m)], interference_power, rng, spectrum);
      if (noise_power > 0.0)
        for (int n = 0; n < samples_per_pulse_; ++n) x[n] += rng.complex_normal(noise_power);
    }
    return buf;
  }

  /// Per-pulse matched filter against that pulse's own unit-energy replica.
  /// Output lag r corresponds to round-trip delay r / fs.
  SlowTimeMatrix range_compress(const CpiBuffer& buf) const {
    if (buf.samples_per_pulse != samples_per_pulse_)
      throw ConfigError("", "buffer was not produced with this processor's geometry");
    SlowTimeMatrix out;
    out.num_pulses = buf.num_pulses;
    out.range_bins = config_.range_bins;
    out.data.resize(static_cast<std::size_t>(out.num_pulses) * out.range_bins);
    std::vector<cplx> work(static_cast<std::size_t>(fft_size_));
    const double scale = 1.0 / fft_size_;
    for (int m = 0; m < buf.num_pulses; ++m) {
      std::fill(std::copy_n(buf.pulse(m), samples_per_pulse_, work.begin()), work.end(), cplx{});
      fft(work.data(), work.data(), fft_size_);
      const auto& h = replicas_.at(static_cast<std::size_t>(buf.waveform_ids[static_cast<std::size_t>(m)]));
      for (int k = 0; k < fft_size_; ++k) work[static_cast<std::size_t>(k)] *= h[static_cast<std::size_t>(k)];
      fft(work.data(), work.data(), fft_size_, FftDirection::backward);
      for (int r = 0; r < out.range_bins; ++r) out.at(m, r) = work[static_cast<std::size_t>(r)] * scale;
    }
    return out;
  }

  RangeDopplerMap range_doppler(const CpiBuffer& buf) const {
    SlowTimeMatrix x = range_compress(buf);
    doppler_process(x, config_.window);
    RangeDopplerMap map;
    map.range_bins = x.range_bins;
    map.doppler_bins = x.num_pulses;
    map.range_bin_m = config_.range_bin_m();
    map.doppler_bin_hz = 1.0 / (config_.pri_s * x.num_pulses);
    map.carrier_hz = catalog_.carrier_hz();
    map.values.resize(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) map.values[i] = std::abs(x.data[i]);
    return map;
  }

  /// Round-trip delay of a range.
  static double delay_of(double range_m) { return 2.0 * range_m / kSpeedOfLight; }

 private:
  // Conjugate spectrum of the unit-energy replica, zero-padded to fft_size_.
  std::vector<cplx> make_replica(const Waveform& w) const {
    std::vector<cplx> r(static_cast<std::size_t>(fft_size_), cplx{});
    const double fbb = baseband_frequency(w, catalog_.channel_bandwidth());
    double energy = 0.0;
    for (int n = 0; n <= 2 * half_; ++n) {
      r[static_cast<std::size_t>(n)] = pulse_value(w, fbb, (n - half_) / config_.sample_rate_hz);
      energy += std::norm(r[static_cast<std::size_t>(n)]);
    }
    const double norm = energy > 0.0 ? 1.0 / std::sqrt(energy) : 0.0;
    for (auto& v : r) v *= norm;
    fft(r.data(), r.data(), fft_size_);
    for (auto& v : r) v = std::conj(v);
    return r;
  }

  // Circular complex Gaussian noise shaped to the marked sub-channels in the
  // frequency domain: each in-band bin gets variance P / N.
  void add_interference(cplx* x, const InterferenceState& s, double power, Rng& rng,
                        std::vector<cplx>& spectrum) const {
    const int n_fft = fft_size_;
    spectrum.assign(static_cast<std::size_t>(n_fft), cplx{});
    const double fs = config_.sample_rate_hz;
    const double b = catalog_.channel_bandwidth();
    const double width = catalog_.subchannel_width();
    const double bin_power = power / n_fft;
    for (int k = 0; k < n_fft; ++k) {
      const double f = (k < n_fft / 2 ? k : k - n_fft) * fs / n_fft;
      const double offset = f + 0.5 * b;
      if (offset < 0.0 || offset >= b) continue;
      const int l = std::min(static_cast<int>(offset / width), catalog_.num_subchannels() - 1);
      if (s.test(l)) spectrum[static_cast<std::size_t>(k)] = rng.complex_normal(bin_power);
    }
    fft(spectrum.data(), spectrum.data(), n_fft, FftDirection::backward);
    for (int n = 0; n < samples_per_pulse_; ++n) x[n] += spectrum[static_cast<std::size_t>(n)];
  }

  RdConfig config_;
  WaveformCatalog catalog_;
  int half_ = 0;
  int samples_per_pulse_ = 0;
  int fft_size_ = 0;
  std::vector<std::vector<cplx>> replicas_;
};

struct Detection {
  int range_bin = 0;
  int doppler_bin = 0;
  double magnitude = 0.0;
  /// Mean square-law power of the training cells.
  double noise_estimate = 0.0;

  /// Cell power over the local noise estimate.
  double snr() const {
    return noise_estimate > 0.0 ? magnitude * magnitude / noise_estimate
                                : std::numeric_limits<double>::infinity();
  }
};

/// Square-law cell-averaging CFAR over a rectangular window. Doppler wraps
/// around; range cells whose window would leave the map are not tested.
inline std::vector<Detection> cfar_2d(const RangeDopplerMap& map, const CfarConfig& cfg) {
  cfg.validate();
  const int R = map.range_bins;
  const int D = map.doppler_bins;
  const int hr = cfg.guard_range + cfg.train_range;
  const int hd = cfg.guard_doppler + cfg.train_doppler;
  if (2 * hr + 1 > R || 2 * hd + 1 > D) throw ConfigError("rdproc.cfar", "window does not fit inside the map");

  // Integral image over Doppler rows extended by hd on each side (wrapped).
  const int rows = D + 2 * hd;
  std::vector<double> integral(static_cast<std::size_t>(rows + 1) * (R + 1), 0.0);
  auto I = [&](int row, int col) -> double& { return integral[static_cast<std::size_t>(row) * (R + 1) + col]; };
  for (int i = 0; i < rows; ++i) {
    const int d = ((i - hd) % D + D) % D;
    double run = 0.0;
    for (int r = 0; r < R; ++r) {
      const double v = map.at(r, d);
      run += v * v;
      I(i + 1, r + 1) = I(i, r + 1) + run;
    }
  }
  // Sum of power over Doppler rows [d0, d1] and range [r0, r1], d in extended coordinates.
  auto box = [&](int d0, int d1, int r0, int r1) {
    return I(d1 + 1, r1 + 1) - I(d0, r1 + 1) - I(d1 + 1, r0) + I(d0, r0);
  };

  const double alpha = cfg.threshold_factor();
  const double n_train = cfg.training_cells();
  std::vector<Detection> out;
  for (int d = 0; d < D; ++d) {
    const int e = d + hd;
    for (int r = hr; r < R - hr; ++r) {
      const double outer = box(e - hd, e + hd, r - hr, r + hr);
      const double inner = box(e - cfg.guard_doppler, e + cfg.guard_doppler, r - cfg.guard_range,
                               r + cfg.guard_range);
      const double mean = std::max(0.0, outer - inner) / n_train;
      const double p = map.at(r, d) * map.at(r, d);
      if (p > alpha * mean) out.push_back({r, d, map.at(r, d), mean});
    }
  }
  return out;
}

/// Strongest detection by magnitude; the earliest in the list on ties.
inline std::optional<Detection> strongest_detection(std::span<const Detection> detections) {
  std::optional<Detection> best;
  for (const auto& d : detections)
    if (!best || d.magnitude > best->magnitude) best = d;
  return best;
}

struct TargetTruth {
  double range_m = 0.0;
  double range_rate_mps = 0.0;
};

struct MetricsConfig {
  int range_tolerance = 2;     ///< bins either side counted as the target
  int doppler_tolerance = 1;
  int mainlobe_halfwidth = 2;  ///< Doppler bins excluded from the sidelobe search
  double max_db = 300.0;
};

struct CpiMetrics {
  bool detected = false;
  std::size_t false_alarms = 0;
  double pfa_hat = 0.0;
  double image_sinr_db = 0.0;
  double peak_sidelobe_db = 0.0;
  int truth_range_bin = 0;
  int truth_doppler_bin = 0;
  std::vector<double> doppler_profile;
};

inline int circular_distance(int a, int b, int n) {
  const int d = std::abs(a - b) % n;
  return std::min(d, n - d);
}

inline CpiMetrics compute_metrics(const RangeDopplerMap& map, const TargetTruth& truth,
                                  std::span<const Detection> detections,
                                  const MetricsConfig& mc = {}) {
  CpiMetrics out;
  const int R = map.range_bins;
  const int D = map.doppler_bins;
  out.truth_range_bin = std::clamp(map.range_bin_of(truth.range_m), 0, R - 1);
  out.truth_doppler_bin = map.doppler_bin_of(truth.range_rate_mps);
  auto near_truth = [&](int r, int d) {
    return std::abs(r - out.truth_range_bin) <= mc.range_tolerance &&
           circular_distance(d, out.truth_doppler_bin, D) <= mc.doppler_tolerance;
  };

  for (const auto& det : detections) {
    if (near_truth(det.range_bin, det.doppler_bin))
      out.detected = true;
    else
      ++out.false_alarms;
  }

  double target_power = 0.0;
  double other_power = 0.0;
  std::size_t target_cells = 0;
  for (int d = 0; d < D; ++d)
    for (int r = 0; r < R; ++r) {
      const double p = map.at(r, d) * map.at(r, d);
      if (near_truth(r, d)) {
        target_power = std::max(target_power, p);
        ++target_cells;
      } else {
        other_power += p;
      }
    }
  const std::size_t others = static_cast<std::size_t>(R) * D - target_cells;
  out.pfa_hat = others ? static_cast<double>(out.false_alarms) / static_cast<double>(others) : 0.0;
  const double mean_other = others ? other_power / static_cast<double>(others) : 0.0;
  if (target_power <= 0.0)
    out.image_sinr_db = -mc.max_db;
  else if (mean_other <= 0.0)
    out.image_sinr_db = mc.max_db;
  else
    out.image_sinr_db = std::clamp(10.0 * std::log10(target_power / mean_other), -mc.max_db, mc.max_db);

  out.doppler_profile = map.doppler_profile(out.truth_range_bin);
  double peak = 0.0;
  double sidelobe = 0.0;
  for (int d = 0; d < D; ++d) {
    const double v = out.doppler_profile[static_cast<std::size_t>(d)];
    const int dist = circular_distance(d, out.truth_doppler_bin, D);
    if (dist <= mc.doppler_tolerance) peak = std::max(peak, v);
    if (dist > mc.mainlobe_halfwidth) sidelobe = std::max(sidelobe, v);
  }
  if (peak <= 0.0)
    out.peak_sidelobe_db = sidelobe > 0.0 ? mc.max_db : 0.0;
  else if (sidelobe <= 0.0)
    out.peak_sidelobe_db = -mc.max_db;
  else
    out.peak_sidelobe_db = std::clamp(20.0 * std::log10(sidelobe / peak), -mc.max_db, mc.max_db);
  return out;
}

// Export. CSV rows are range bins, columns Doppler bins. The binary form is
// little-endian float32 in the same row-major order, described by a JSON
// sidecar written next to it.

inline void write_map_csv(const RangeDopplerMap& map, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.precision(9);
  for (int r = 0; r < map.range_bins; ++r) {
    for (int d = 0; d < map.doppler_bins; ++d) {
      if (d) os << ',';
      os << map.at(r, d);
    }
    os << '\n';
  }
}

inline nlohmann::json map_sidecar(const RangeDopplerMap& map) {
  return {{"rows", map.range_bins},
          {"cols", map.doppler_bins},
          {"dtype", "float32"},
          {"byte_order", "little"},
          {"layout", "row-major, rows = range bins, cols = Doppler bins"},
          {"range_bin_m", map.range_bin_m},
          {"doppler_bin_hz", map.doppler_bin_hz},
          {"zero_doppler_col", map.zero_doppler_bin()},
          {"carrier_hz", map.carrier_hz}};
}

inline void write_map_float32(const RangeDopplerMap& map, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  for (int r = 0; r < map.range_bins; ++r)
    for (int d = 0; d < map.doppler_bins; ++d) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(map.at(r, d)));
      if constexpr (std::endian::native == std::endian::big)
        bits = (bits >> 24) | ((bits >> 8) & 0xFF00U) | ((bits << 8) & 0xFF0000U) | (bits << 24);
      os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  std::ofstream side(path + ".json");
  side << map_sidecar(map).dump(2) << '\n';
}

}  // namespace cradar
