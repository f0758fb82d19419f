#pragma once

// Context assembly, the linear Thompson Sampling and EXP3 learners, baseline
// policies and regret accounting.
//
// Both learners minimize cost. They are templated on the context dimension so
// the radar's three-feature contexts use fixed-size Eigen types while tests
// and synthetic environments can use any dimension (Eigen::Dynamic included).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "cradar/errors.hpp"
#include "cradar/rng.hpp"
#include "cradar/spectrum.hpp"
#include "cradar/waveforms.hpp"

namespace cradar {

template <int Dim>
using Vector = Eigen::Matrix<double, Dim, 1>;
template <int Dim>
using Matrix = Eigen::Matrix<double, Dim, Dim>;

/// A selectable action and its context for the current round.
template <int Dim = 3>
struct Arm {
  int id = 0;
  Vector<Dim> x;
};

/// (xi1, xi2, xi3) = (sample mean, sample variance, most recent cost) of the
/// costs observed for one (waveform, sensed state) pair.
struct ContextVector {
  double xi1 = 0.0;
  double xi2 = 0.0;
  double xi3 = 0.0;

  static constexpr int kDim = 3;

  Eigen::Vector3d vector() const { return {xi1, xi2, xi3}; }
  friend bool operator==(const ContextVector&, const ContextVector&) = default;
};

/// Running cost statistics per (waveform id, sensed state). Unseen pairs
/// report the cold-start context (0, 0, 0).
class HistoryStore {
 public:
  struct Stats {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double last = 0.0;

    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  };

  void record(int waveform_id, const InterferenceState& sensed, double observed_cost) {
    Stats& s = table_[key(waveform_id, sensed)];
    ++s.count;
    const double delta = observed_cost - s.mean;
    s.mean += delta / static_cast<double>(s.count);
    s.m2 += delta * (observed_cost - s.mean);
    s.last = observed_cost;
  }

  const Stats* find(int waveform_id, const InterferenceState& sensed) const {
    const auto it = table_.find(key(waveform_id, sensed));
    return it == table_.end() ? nullptr : &it->second;
  }

  ContextVector context(int waveform_id, const InterferenceState& sensed) const {
    const Stats* s = find(waveform_id, sensed);
    if (s == nullptr) return {};
    return {s->mean, s->variance(), s->last};
  }

  std::size_t pairs() const { return table_.size(); }

 private:
  struct Key {
    std::uint64_t bits;
    int id;
    int size;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = k.bits * 0x9E3779B97F4A7C15ULL;
      h ^= (static_cast<std::uint64_t>(k.id) << 7) ^ static_cast<std::uint64_t>(k.size);
      h *= 0xBF58476D1CE4E5B9ULL;
      return static_cast<std::size_t>(h ^ (h >> 31));
    }
  };

  static Key key(int id, const InterferenceState& s) { return {s.bits(), id, s.size()}; }

  std::unordered_map<Key, Stats, KeyHash> table_;
};

inline ContextVector build_context(const HistoryStore& history, const Waveform& w,
                                   const InterferenceState& sensed) {
  return history.context(w.id, sensed);
}

/// Index of the arm minimizing <x, theta>; lowest id among exact ties.
template <int Dim, typename Theta>
std::size_t argmin_inner_product(std::span<const Arm<Dim>> arms, const Theta& theta) {
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double v = arms[i].x.dot(theta);
    if (v < best_value || (v == best_value && arms[i].id < arms[best].id)) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

/// Gaussian linear Thompson Sampling: posterior N(theta_hat, v^2 B^-1) with
/// B = I + sum x x^T and theta_hat = B^-1 sum x C.
template <int Dim = 3>
class ThompsonSampler {
 public:
  using Vec = Vector<Dim>;
  using Mat = Matrix<Dim>;

  explicit ThompsonSampler(double exploration_scale = 1.0, int dim = Dim)
      : v_(exploration_scale) {
    if (dim <= 0) throw ConfigError("policy.ts.dim", "must be positive");
    if (!(exploration_scale >= 0.0)) throw ConfigError("policy.ts.v", "must be non-negative");
    precision_ = Mat::Identity(dim, dim);
    f_ = Vec::Zero(dim);
    theta_hat_ = Vec::Zero(dim);
    llt_.compute(precision_);
  }

  int dim() const { return static_cast<int>(f_.size()); }
  double exploration_scale() const { return v_; }
  const Mat& precision() const { return precision_; }
  const Vec& f() const { return f_; }
  const Vec& theta_hat() const { return theta_hat_; }
  std::size_t updates() const { return updates_; }

  /// theta ~ N(theta_hat, v^2 B^-1). With B = U^T U, U^-1 z has covariance B^-1.
  Vec sample_parameter(Rng& rng) const {
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = rng.normal();
    return theta_hat_ + v_ * llt_.matrixU().solve(z);
  }

  /// Returns the id of the selected arm. Always draws a parameter sample so the
  /// policy's random stream advances identically whatever the candidate count.
  int select(std::span<const Arm<Dim>> arms, Rng& rng) const {
    if (arms.empty()) throw ConfigError("", "Thompson Sampling needs at least one candidate");
    const Vec theta = sample_parameter(rng);
    return arms[argmin_inner_product<Dim>(arms, theta)].id;
  }

  void update(const Vec& x, double observed_cost) {
    ++updates_;
    if (x.isZero(0.0)) return;
    precision_.noalias() += x * x.transpose();
    f_ += x * observed_cost;
    llt_.compute(precision_);
    theta_hat_ = llt_.solve(f_);
  }

 private:
  double v_;
  Mat precision_;
  Vec f_;
  Vec theta_hat_;
  Eigen::LLT<Mat> llt_;
  std::size_t updates_ = 0;
};

/// Exponential weights over cumulative least-squares cost estimates, mixed
/// with a uniform exploration distribution over the allowed set.
template <int Dim = 3>
class Exp3Learner {
 public:
  using Vec = Vector<Dim>;
  using Mat = Matrix<Dim>;

  Exp3Learner(std::size_t num_arms, double epsilon, double gamma, int dim = Dim,
              double ridge = 1e-8)
      : cumulative_(num_arms, 0.0), epsilon_(epsilon), gamma_(gamma), dim_(dim), ridge_(ridge) {
    if (num_arms == 0) throw ConfigError("policy.exp3", "needs at least one arm");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("policy.exp3.epsilon", "must be in (0, 1)");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("policy.exp3.gamma", "must be in [0, 1]");
    if (dim <= 0) throw ConfigError("policy.exp3.dim", "must be positive");
  }

  /// ln(W) / (3 d sqrt(n)), kept inside (0, 1).
  static double default_epsilon(std::size_t num_arms, int dim, std::size_t horizon) {
    const double e = std::log(static_cast<double>(std::max<std::size_t>(num_arms, 2))) /
                     (3.0 * dim * std::sqrt(static_cast<double>(std::max<std::size_t>(horizon, 1))));
    return std::min(e, 0.999);
  }

  /// min(1, sqrt(W ln W / n)).
  static double default_gamma(std::size_t num_arms, std::size_t horizon) {
    const double w = static_cast<double>(std::max<std::size_t>(num_arms, 2));
    return std::min(1.0, std::sqrt(w * std::log(w) / static_cast<double>(std::max<std::size_t>(horizon, 1))));
  }

  double epsilon() const { return epsilon_; }
  double gamma() const { return gamma_; }
  const std::vector<double>& cumulative_estimates() const { return cumulative_; }

  /// P(w) = gamma / |W'| + (1 - gamma) exp(-eps S_w) / Z over `allowed` (ids).
  std::vector<double> distribution(std::span<const int> allowed) const {
    if (allowed.empty()) throw ConfigError("", "EXP3 needs a non-empty allowed set");
    double lowest = std::numeric_limits<double>::infinity();
    for (int id : allowed) lowest = std::min(lowest, cumulative_.at(static_cast<std::size_t>(id)));
    std::vector<double> p(allowed.size());
    double z = 0.0;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
      p[i] = std::exp(-epsilon_ * (cumulative_[static_cast<std::size_t>(allowed[i])] - lowest));
      z += p[i];
    }
    const double uniform = 1.0 / static_cast<double>(allowed.size());
    for (auto& q : p) q = gamma_ * uniform + (1.0 - gamma_) * q / z;
    return p;
  }

  /// Inverse-CDF draw; returns an index into `dist`.
  static std::size_t sample(std::span<const double> dist, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      acc += dist[i];
      if (u < acc) return i;
    }
    return dist.size() - 1;
  }

  /// theta_t = Q^-1 x_played C with Q = sum_w P(w) x_w x_w^T. Q is used as is
  /// when its LDL^T pivots are well conditioned, otherwise ridge * I is added.
  Vec estimate_parameter(std::span<const Arm<Dim>> arms, std::size_t played_index,
                         double observed_cost, std::span<const double> dist) const {
    Mat q = Mat::Zero(dim_, dim_);
    for (std::size_t i = 0; i < arms.size(); ++i) q.noalias() += dist[i] * arms[i].x * arms[i].x.transpose();
    const Vec rhs = arms[played_index].x * observed_cost;
    if (rhs.isZero(0.0)) return Vec::Zero(dim_);

    Eigen::LDLT<Mat> ldlt(q);
    if (!well_conditioned(ldlt, q)) {
      q.diagonal().array() += ridge_;
      ldlt.compute(q);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw DegenerateContextError("EXP3 design matrix is singular after regularization");
    }
    return ldlt.solve(rhs);
  }

  /// Adds <x_w, theta_t> to every allowed arm's cumulative estimate.
  void update(std::span<const Arm<Dim>> arms, int played_id, double observed_cost,
              std::span<const double> dist) {
    if (arms.size() != dist.size()) throw ConfigError("", "contexts and distribution differ in length");
    std::size_t played = arms.size();
    for (std::size_t i = 0; i < arms.size(); ++i)
      if (arms[i].id == played_id) played = i;
    if (played == arms.size()) throw ConfigError("", "played arm is not in the allowed set");
    const Vec theta = estimate_parameter(arms, played, observed_cost, dist);
    for (const auto& arm : arms) cumulative_.at(static_cast<std::size_t>(arm.id)) += arm.x.dot(theta);
  }

 private:
  static bool well_conditioned(const Eigen::LDLT<Mat>& ldlt, const Mat& q) {
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const double scale = q.diagonal().maxCoeff();
    return scale > 0.0 && ldlt.vectorD().minCoeff() > 1e-12 * scale;
  }

  std::vector<double> cumulative_;
  double epsilon_;
  double gamma_;
  int dim_;
  double ridge_;
};

/// Cumulative strong regret and running average cost.
class RegretLedger {
 public:
  /// Returns the regret increment chosen - oracle.
  double record(double chosen_cost, double oracle_cost) {
    const double inc = chosen_cost - oracle_cost;
    regret_ += inc;
    cost_sum_ += chosen_cost;
    oracle_sum_ += oracle_cost;
    ++steps_;
    return inc;
  }

  double cumulative_regret() const { return regret_; }
  std::size_t steps() const { return steps_; }
  double average_cost() const { return steps_ ? cost_sum_ / static_cast<double>(steps_) : 0.0; }
  double average_oracle_cost() const {
    return steps_ ? oracle_sum_ / static_cast<double>(steps_) : 0.0;
  }

 private:
  double regret_ = 0.0;
  double cost_sum_ = 0.0;
  double oracle_sum_ = 0.0;
  std::size_t steps_ = 0;
};

/// Static radar: always the widest (full-band) waveform.
inline const Waveform& baseline_fixed(const WaveformCatalog& catalog) { return catalog.widest(); }

/// Sense-and-avoid: widest waveform whose occupied band fits inside the
/// longest run of clear sub-channels of `sensed` (earliest run on ties, lowest
/// id among equal widths). Falls back to `previous`, or the full band, when
/// nothing fits.
inline Waveform baseline_reactive(const InterferenceState& sensed, const WaveformCatalog& catalog,
                                  const std::optional<Waveform>& previous = std::nullopt) {
  int best_start = -1;
  int best_len = 0;
  for (int l = 0; l < sensed.size();) {
    if (sensed.test(l)) {
      ++l;
      continue;
    }
    int end = l;
    while (end < sensed.size() && !sensed.test(end)) ++end;
    if (end - l > best_len) {
      best_len = end - l;
      best_start = l;
    }
    l = end;
  }
  const Waveform fallback = previous ? *previous : catalog.widest();
  if (best_len == 0) return fallback;

  const double width = catalog.subchannel_width();
  const double tol = 1e-9 * catalog.channel_bandwidth();
  const double lo = best_start * width - tol;
  const double hi = (best_start + best_len) * width + tol;
  const Waveform* best = nullptr;
  for (const auto& w : catalog) {
    const Band b = catalog.band(w);
    if (b.lo >= lo && b.hi <= hi && (best == nullptr || w.bandwidth_hz > best->bandwidth_hz))
      best = &w;
  }
  return best ? *best : fallback;
}

}  // namespace cradar
