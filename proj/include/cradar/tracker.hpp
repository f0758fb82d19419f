#pragma once

// Constant-velocity Kalman tracking of (range, range rate) and the
// waveform-parameter rule derived from the tracking error covariance.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cradar/errors.hpp"
#include "cradar/waveforms.hpp"

namespace cradar {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Observation noise of a chirp with duration T, sweep rate alpha and SNR eta:
///   [ c^2 T^2 / (2 eta)           -c^2 alpha T^2 / (fc eta)                 ]
///   [ -c^2 alpha T^2 / (fc eta)   c^2 / (fc eta) (1/(2T) + 2 alpha^2 T^2)   ]
inline Mat2 measurement_noise(double T, double alpha, double eta, double fc) {
  if (!(T > 0.0)) throw DomainError("pulse duration must be positive");
  if (!(eta > 0.0)) throw DomainError("SNR must be positive");
  if (!(fc > 0.0)) throw DomainError("carrier frequency must be positive");
  const double c2 = kSpeedOfLight * kSpeedOfLight;
  const double off = -c2 * alpha * T * T / (fc * eta);
  Mat2 n;
  n << c2 * T * T / (2.0 * eta), off, off, c2 / (fc * eta) * (1.0 / (2.0 * T) + 2.0 * alpha * alpha * T * T);
  return n;
}

/// White-acceleration process noise for a constant-velocity model.
inline Mat2 process_noise(double dt, double accel_std) {
  const double q = accel_std * accel_std;
  Mat2 m;
  m << q * dt * dt * dt * dt / 4.0, q * dt * dt * dt / 2.0, q * dt * dt * dt / 2.0, q * dt * dt;
  return m;
}

struct TrackState {
  Vec2 x = Vec2::Zero();  ///< (range m, range rate m/s)
  Mat2 P = Mat2::Identity();
};

struct KalmanDiagnostics {
  bool measured = false;
  Vec2 innovation = Vec2::Zero();
  Mat2 innovation_cov = Mat2::Zero();
  Mat2 gain = Mat2::Zero();
  double nis = 0.0;
  bool clamped = false;  ///< covariance had to be repaired
};

/// Symmetrizes P and lifts negative eigenvalues to zero. Returns true when
/// anything beyond symmetrization was needed.
inline bool repair_covariance(Mat2& P) {
  P = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<Mat2> es(P);
  if (es.eigenvalues().minCoeff() >= 0.0) return false;
  const Vec2 lambda = es.eigenvalues().cwiseMax(0.0);
  P = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  return true;
}

inline TrackState kalman_predict(const TrackState& track, double dt, const Mat2& Q) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  Mat2 F;
  F << 1.0, dt, 0.0, 1.0;
  return {F * track.x, F * track.P * F.transpose() + Q};
}

/// Predict over dt, then update with z (H = I) when present. The update uses
/// the Joseph form.
inline TrackState kalman_step(const TrackState& track, const std::optional<Vec2>& z, const Mat2& N,
                              double dt, const Mat2& Q, KalmanDiagnostics* diag = nullptr) {
  TrackState next = kalman_predict(track, dt, Q);
  KalmanDiagnostics d;
  if (z) {
    d.measured = true;
    d.innovation = *z - next.x;
    d.innovation_cov = next.P + N;
    d.gain = next.P * d.innovation_cov.inverse();
    d.nis = d.innovation.dot(d.innovation_cov.ldlt().solve(d.innovation));
    next.x += d.gain * d.innovation;
    const Mat2 IK = Mat2::Identity() - d.gain;
    next.P = IK * next.P * IK.transpose() + d.gain * N * d.gain.transpose();
  }
  d.clamped = repair_covariance(next.P);
  if (diag) *diag = d;
  return next;
}

struct WaveformParams {
  double alpha = 0.0;  ///< Hz/s
  double T = 0.0;      ///< s
};

/// alpha* = -w p12 / (2 p11), T* = (p11^2 / (w^2 det P))^(1/4) with w = 2 pi fc.
inline WaveformParams optimal_waveform_params(const Mat2& P, double fc) {
  const double p11 = P(0, 0);
  const double p12 = 0.5 * (P(0, 1) + P(1, 0));
  const double p22 = P(1, 1);
  const double det = p11 * p22 - p12 * p12;
  if (!(p11 > 0.0) || !(det > 0.0)) throw DomainError("tracking covariance is degenerate");
  const double w = 2.0 * std::numbers::pi * fc;
  return {-w * p12 / (2.0 * p11), std::pow(p11 * p11 / (w * w * det), 0.25)};
}

/// Axis-aligned (T, alpha) range spanned by a set of waveforms.
struct ParamBox {
  double t_min = 0.0, t_max = 0.0;
  double a_min = 0.0, a_max = 0.0;

  static ParamBox of(std::span<const Waveform> ws) {
    ParamBox b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& w : ws) {
      b.t_min = std::min(b.t_min, w.pulse_duration_s);
      b.t_max = std::max(b.t_max, w.pulse_duration_s);
      b.a_min = std::min(b.a_min, w.chirp_rate());
      b.a_max = std::max(b.a_max, w.chirp_rate());
    }
    return b;
  }

  WaveformParams clamp(const WaveformParams& p) const {
    return {std::clamp(p.alpha, a_min, a_max), std::clamp(p.T, t_min, t_max)};
  }
  double t_span() const { return t_max > t_min ? t_max - t_min : 1.0; }
  double a_span() const { return a_max > a_min ? a_max - a_min : 1.0; }
};

enum class TrackerCoupling { none, direct, penalty };

/// Nearest allowed waveform in (T, alpha) after scaling each axis by the
/// catalog's span; lowest id on ties.
inline Waveform select_tracked_waveform(const WaveformParams& target, std::span<const Waveform> allowed,
                                        const ParamBox& box) {
  if (allowed.empty()) throw ConfigError("", "select_tracked_waveform needs candidates");
  const Waveform* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& w : allowed) {
    const double dt = (w.pulse_duration_s - target.T) / box.t_span();
    const double da = (w.chirp_rate() - target.alpha) / box.a_span();
    const double d = dt * dt + da * da;
    if (d < best_d || (d == best_d && w.id < best->id)) {
      best = &w;
      best_d = d;
    }
  }
  return *best;
}

/// lambda ((alpha_w - alpha*) / alpha span)^2, added to a candidate's cost.
inline double tracking_penalty(const WaveformParams& target, const Waveform& w, double weight,
                               const ParamBox& box) {
  const double da = (w.chirp_rate() - target.alpha) / box.a_span();
  return weight * da * da;
}

inline double rmse(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) throw ConfigError("", "rmse needs equal-length logs");
  if (estimates.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truth[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(estimates.size()));
}

struct TrackLogRow {
  std::size_t cpi_index = 0;
  double truth_range = 0.0;
  double est_range = 0.0;
  double est_rate = 0.0;
  double p11 = 0.0, p12 = 0.0, p22 = 0.0;
  double chosen_T = 0.0;
  double chosen_alpha = 0.0;
};

inline void write_track_csv(std::span<const TrackLogRow> rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.precision(12);
  os << "cpi_index,truth_range,est_range,est_rate,p11,p12,p22,chosen_T,chosen_alpha\n";
  for (const auto& r : rows)
    os << r.cpi_index << ',' << r.truth_range << ',' << r.est_range << ',' << r.est_rate << ','
       << r.p11 << ',' << r.p12 << ',' << r.p22 << ',' << r.chosen_T << ',' << r.chosen_alpha << '\n';
}

}  // namespace cradar
