#pragma once

// Binary interference state, spectrum sensing, and the collision / missed
// bandwidth cost.

#include <bit>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cradar/errors.hpp"
#include "cradar/rng.hpp"
#include "cradar/waveforms.hpp"

namespace cradar {

/// Length-S occupancy vector; bit l (0-based) is sub-channel l+1. Serialized
/// as a bit string with sub-channel 1 first, e.g. "1100000000".
class InterferenceState {
 public:
  InterferenceState() = default;
  explicit InterferenceState(int size, std::uint64_t bits = 0) : bits_(bits), size_(size) {
    if (size < 0 || size > 64) throw ConfigError("", "interference state length must be in [0, 64]");
    bits_ &= full_mask();
  }

  static InterferenceState from_string(std::string_view text) {
    InterferenceState s(static_cast<int>(text.size()));
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '1')
        s.bits_ |= std::uint64_t{1} << i;
      else if (text[i] != '0')
        throw ConfigError("", "interference state strings contain only '0' and '1'");
    }
    return s;
  }

  static InterferenceState from_bits(std::span<const int> bits) {
    InterferenceState s(static_cast<int>(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i] != 0) s.bits_ |= std::uint64_t{1} << i;
    return s;
  }

  int size() const { return size_; }
  std::uint64_t bits() const { return bits_; }
  bool test(int l) const { return (bits_ >> l) & 1U; }
  void set(int l, bool on = true) {
    const std::uint64_t b = std::uint64_t{1} << l;
    bits_ = on ? (bits_ | b) : (bits_ & ~b);
  }
  int count() const { return std::popcount(bits_); }
  bool any() const { return bits_ != 0; }

  std::string to_string() const {
    std::string out(static_cast<std::size_t>(size_), '0');
    for (int l = 0; l < size_; ++l)
      if (test(l)) out[static_cast<std::size_t>(l)] = '1';
    return out;
  }

  InterferenceState operator|(const InterferenceState& o) const {
    return InterferenceState(size_, bits_ | o.bits_);
  }

  friend bool operator==(const InterferenceState&, const InterferenceState&) = default;

 private:
  std::uint64_t full_mask() const {
    return size_ == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << size_) - 1);
  }

  std::uint64_t bits_ = 0;
  int size_ = 0;
};

struct CostParams {
  double beta1 = 0.0;  // 1/Hz
  double beta2 = 0.0;  // 1/Hz
  /// Keep BW_i* - BW_i even when negative instead of clamping at zero.
  bool allow_negative_missed = false;

  /// beta1 = beta2 = 1/(2B).
  static CostParams for_channel(double channel_bandwidth_hz) {
    const double b = 0.5 / channel_bandwidth_hz;
    return {b, b, false};
  }

  void validate(double channel_bandwidth_hz, const std::string& path = "cost") const {
    const double limit = 1.0 / channel_bandwidth_hz;
    const double tol = 1e-12 * limit;
    if (beta1 < 0.0 || beta1 > limit + tol) throw ConfigError(path + ".beta1", "must be in [0, 1/B]");
    if (beta2 < 0.0 || beta2 > limit + tol) throw ConfigError(path + ".beta2", "must be in [0, 1/B]");
    if (beta1 + beta2 > limit + tol)
      throw ConfigError(path, "beta1 + beta2 must not exceed 1/B");
  }
};

/// (B/S) x number of jammed sub-channels whose center lies in w's band.
inline double collision_bandwidth(const Waveform& w, const InterferenceState& s,
                                  const WaveformCatalog& catalog) {
  const int hits = std::popcount(catalog.occupancy_mask(w.id) & s.bits());
  return hits * catalog.subchannel_width();
}

/// Bandwidth of the widest zero-collision catalog member, if any.
inline std::optional<double> widest_clean_bandwidth(const InterferenceState& s,
                                                    const WaveformCatalog& catalog) {
  std::optional<double> best;
  for (const auto& w : catalog)
    if ((catalog.occupancy_mask(w.id) & s.bits()) == 0 && (!best || w.bandwidth_hz > *best))
      best = w.bandwidth_hz;
  return best;
}

inline double missed_from_widest(const Waveform& w, std::optional<double> widest_clean,
                                 bool allow_negative) {
  if (!widest_clean) return 0.0;
  const double diff = *widest_clean - w.bandwidth_hz;
  return allow_negative ? diff : std::max(0.0, diff);
}

inline double missed_bandwidth(const Waveform& w, const InterferenceState& s,
                               const WaveformCatalog& catalog, bool allow_negative = false) {
  return missed_from_widest(w, widest_clean_bandwidth(s, catalog), allow_negative);
}

inline double cost(const Waveform& w, const InterferenceState& s, const CostParams& params,
                   const WaveformCatalog& catalog) {
  return params.beta1 * collision_bandwidth(w, s, catalog) +
         params.beta2 * missed_bandwidth(w, s, catalog, params.allow_negative_missed);
}

/// Cost of every catalog waveform against one state, indexed by id.
inline std::vector<double> cost_table(const InterferenceState& s, const CostParams& params,
                                      const WaveformCatalog& catalog) {
  const auto widest = widest_clean_bandwidth(s, catalog);
  std::vector<double> out;
  out.reserve(catalog.size());
  for (const auto& w : catalog)
    out.push_back(params.beta1 * collision_bandwidth(w, s, catalog) +
                  params.beta2 * missed_from_widest(w, widest, params.allow_negative_missed));
  return out;
}

/// Flips each bit independently with probability `flip_prob`.
inline InterferenceState sense(const InterferenceState& true_state, double flip_prob, Rng& rng) {
  if (flip_prob < 0.0 || flip_prob >= 0.5)
    throw ConfigError("sensing.flip_prob", "must be in [0, 0.5)");
  if (flip_prob == 0.0) return true_state;
  InterferenceState out = true_state;
  for (int l = 0; l < out.size(); ++l)
    if (rng.bernoulli(flip_prob)) out.set(l, !out.test(l));
  return out;
}

/// Minimum-cost member of `allowed` against the true state; lowest id on ties.
inline Waveform oracle_waveform(const InterferenceState& s, const CostParams& params,
                                std::span<const Waveform> allowed, const WaveformCatalog& catalog) {
  if (allowed.empty()) throw ConfigError("", "oracle_waveform needs a non-empty allowed set");
  const auto widest = widest_clean_bandwidth(s, catalog);
  const Waveform* best = nullptr;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& w : allowed) {
    const double c = params.beta1 * collision_bandwidth(w, s, catalog) +
                     params.beta2 * missed_from_widest(w, widest, params.allow_negative_missed);
    if (c < best_cost || (c == best_cost && w.id < best->id)) {
      best = &w;
      best_cost = c;
    }
  }
  return *best;
}

}  // namespace cradar

template <>
struct std::hash<cradar::InterferenceState> {
  std::size_t operator()(const cradar::InterferenceState& s) const noexcept {
    return std::hash<std::uint64_t>{}(s.bits() * 0x9E3779B97F4A7C15ULL ^
                                      static_cast<std::uint64_t>(s.size()));
  }
};
