#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "cradar/rng.hpp"
#include "cradar/tracker.hpp"

using namespace cradar;

TEST(MeasurementNoise, ZeroChirpIsDiagonal) {
  const double c = kSpeedOfLight, T = 1e-6, eta = 50.0, fc = 3e9;
  const Mat2 n = measurement_noise(T, 0.0, eta, fc);
  EXPECT_EQ(n(0, 1), 0.0);
  EXPECT_EQ(n(1, 0), 0.0);
  EXPECT_NEAR(n(0, 0), c * c * T * T / (2 * eta), 1e-9 * n(0, 0));
  EXPECT_NEAR(n(1, 1), c * c / (2 * T * fc * eta), 1e-9 * n(1, 1));
}

TEST(MeasurementNoise, InverseInSnr) {
  const Mat2 a = measurement_noise(2e-6, 3e12, 10.0, 3e9);
  const Mat2 b = measurement_noise(2e-6, 3e12, 20.0, 3e9);
  EXPECT_LT((a - 2.0 * b).norm(), 1e-12 * a.norm());
}

TEST(MeasurementNoise, DirectSubstitution) {
  // T = 10 us, alpha = 1e12 Hz/s, eta = 100, fc = 3 GHz, worked term by term.
  const double c2 = 299792458.0 * 299792458.0;
  const double T = 1e-5, a = 1e12, eta = 100.0, fc = 3e9;
  const double n11 = c2 * 1e-10 / 200.0;
  const double n12 = -c2 * 1e12 * 1e-10 / 3e11;
  const double n22 = c2 / 3e11 * (1.0 / 2e-5 + 2.0 * 1e24 * 1e-10);
  const Mat2 n = measurement_noise(T, a, eta, fc);
  EXPECT_NEAR(n(0, 0), n11, 1e-12 * n11);
  EXPECT_NEAR(n(0, 1), n12, 1e-12 * std::abs(n12));
  EXPECT_NEAR(n(1, 0), n12, 1e-12 * std::abs(n12));
  EXPECT_NEAR(n(1, 1), n22, 1e-12 * n22);
}

TEST(MeasurementNoise, DomainErrors) {
  EXPECT_THROW(measurement_noise(0.0, 1e12, 10.0, 3e9), DomainError);
  EXPECT_THROW(measurement_noise(1e-6, 1e12, -1.0, 3e9), DomainError);
}

TEST(MeasurementNoise, PositiveDefinite) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Mat2 n = measurement_noise(rng.uniform(1e-7, 1e-4), rng.uniform(-1e14, 1e14), rng.uniform(0.1, 1e4), 3e9);
    EXPECT_GT(n(0, 0), 0.0);
    EXPECT_GT(n.determinant(), 0.0);
  }
}

TEST(Kalman, HugeNoiseIgnoresMeasurement) {
  TrackState t{Vec2(100.0, 2.0), Mat2::Identity()};
  const Mat2 Q = process_noise(0.1, 1.0);
  const TrackState prior = kalman_predict(t, 0.1, Q);
  const TrackState post = kalman_step(t, Vec2(500.0, -40.0), 1e12 * Mat2::Identity(), 0.1, Q);
  EXPECT_LT((post.x - prior.x).norm(), 1e-6);
  EXPECT_LT((post.P - prior.P).norm(), 1e-6);
}

TEST(Kalman, TinyNoiseTrustsMeasurement) {
  TrackState t{Vec2(100.0, 2.0), 25.0 * Mat2::Identity()};
  const Vec2 z(103.0, 1.0);
  const TrackState post = kalman_step(t, z, 1e-12 * Mat2::Identity(), 0.1, Mat2::Zero());
  EXPECT_LT((post.x - z).norm(), 1e-9);
}

TEST(Kalman, MissedDetectionPredictsOnly) {
  TrackState t{Vec2(100.0, 2.0), Mat2::Identity()};
  const Mat2 Q = process_noise(0.5, 1.0);
  const TrackState a = kalman_step(t, std::nullopt, Mat2::Identity(), 0.5, Q);
  const TrackState b = kalman_predict(t, 0.5, Q);
  EXPECT_EQ(a.x, b.x);
  EXPECT_LT((a.P - b.P).norm(), 1e-15);
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
  Rng rng(2);
  TrackState t{Vec2(0, 0), Mat2::Identity()};
  for (int k = 0; k < 2000; ++k) {
    const Mat2 N = measurement_noise(0.5e-6, rng.uniform(2e13, 2e14), rng.uniform(1.0, 1e4), 3e9);
    t = kalman_step(t, Vec2(rng.normal(), rng.normal()), N, 0.026, process_noise(0.026, 1.0));
    ASSERT_NEAR(t.P(0, 1), t.P(1, 0), 1e-12 * t.P.norm());
    Eigen::SelfAdjointEigenSolver<Mat2> es(t.P);
    ASSERT_GE(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Kalman, RepairClampsNegativeEigenvalue) {
  Mat2 P;
  P << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  EXPECT_TRUE(repair_covariance(P));
  Eigen::SelfAdjointEigenSolver<Mat2> es(P);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-15);
}

TEST(Kalman, NisConsistentOnLinearGaussianTrack) {
  const double dt = 1.0;
  const Mat2 Q = process_noise(dt, 0.5);
  Mat2 N;
  N << 4.0, 0.5, 0.5, 1.0;
  const Eigen::LLT<Mat2> qc(Q + 1e-12 * Mat2::Identity()), nc(N);
  Mat2 F;
  F << 1.0, dt, 0.0, 1.0;
  double total = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    Vec2 x(1000.0, 5.0);
    TrackState t{x + Vec2(rng.normal() * 10.0, rng.normal() * 2.0), Vec2(100.0, 4.0).asDiagonal()};
    for (int k = 0; k < 500; ++k) {
      x = F * x + qc.matrixL() * Vec2(rng.normal(), rng.normal());
      const Vec2 z = x + nc.matrixL() * Vec2(rng.normal(), rng.normal());
      KalmanDiagnostics d;
      t = kalman_step(t, z, N, dt, Q, &d);
      total += d.nis;
      ++count;
    }
  }
  const double mean = total / count;
  // chi-square(2): mean 2, variance 4.
  EXPECT_NEAR(mean, 2.0, 3.0 * 2.0 / std::sqrt(static_cast<double>(count)));
}

TEST(OptimalParams, UncorrelatedErrorsGiveZeroChirp) {
  const Mat2 P = Vec2(4.0, 9.0).asDiagonal();
  EXPECT_EQ(optimal_waveform_params(P, 3e9).alpha, 0.0);
}

TEST(OptimalParams, UnitCase) {
  const double fc = 1.0 / (2.0 * std::numbers::pi);
  const auto p = optimal_waveform_params(Mat2::Identity(), fc);
  EXPECT_NEAR(p.T, 1.0, 1e-15);
  EXPECT_EQ(p.alpha, 0.0);
}

TEST(OptimalParams, DegenerateRejected) {
  Mat2 P;
  P << 1.0, 1.0, 1.0, 1.0;
  EXPECT_THROW(optimal_waveform_params(P, 3e9), DomainError);
  EXPECT_THROW(optimal_waveform_params(Mat2::Zero(), 3e9), DomainError);
}

TEST(OptimalParams, ScalingLaw) {
  Mat2 P;
  P << 3.0, -0.7, -0.7, 2.0;
  const auto a = optimal_waveform_params(P, 3e9);
  // Invariant to a common scale of P; T* goes as fc^(-1/2), alpha* as fc.
  const auto b = optimal_waveform_params(16.0 * P, 3e9);
  EXPECT_NEAR(b.alpha, a.alpha, 1e-12 * std::abs(a.alpha));
  EXPECT_NEAR(b.T, a.T, 1e-12 * a.T);
  const auto c = optimal_waveform_params(P, 4.0 * 3e9);
  EXPECT_NEAR(c.T, a.T / 2.0, 1e-12 * a.T);
  EXPECT_NEAR(c.alpha, 4.0 * a.alpha, 1e-12 * std::abs(a.alpha));
}

// Oracle objective: tr(adj(P) N') with the Gaussian-LFM bound
//   N' = [ T^2/2            -alpha T^2/w                    ]
//        [ -alpha T^2/w     1/(2 w^2 T^2) + 2 alpha^2 T^2/w^2 ]
// minimized by a zooming grid search over (T, alpha).
TEST(OptimalParams, MatchGridSearch) {
  Rng rng(3);
  const double w = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double p11 = rng.uniform(0.5, 2.0), p22 = rng.uniform(0.5, 2.0);
    const double p12 = rng.uniform(-0.6, 0.6) * std::sqrt(p11 * p22);
    Mat2 P;
    P << p11, p12, p12, p22;
    const auto opt = optimal_waveform_params(P, w / (2.0 * std::numbers::pi));
    auto J = [&](double T, double a) {
      const double n11 = T * T / 2.0;
      const double n12 = -a * T * T / w;
      const double n22 = 1.0 / (2.0 * w * w * T * T) + 2.0 * a * a * T * T / (w * w);
      return p22 * n11 - 2.0 * p12 * n12 + p11 * n22;
    };
    double tc = 2.0, ac = 0.0, tw = 1.95, aw = 4.0;
    for (int zoom = 0; zoom < 8; ++zoom) {
      double best = std::numeric_limits<double>::infinity(), bt = tc, ba = ac;
      for (int i = -20; i <= 20; ++i)
        for (int j = -20; j <= 20; ++j) {
          const double T = tc + tw * i / 20.0, a = ac + aw * j / 20.0;
          if (T <= 0.0) continue;
          const double v = J(T, a);
          if (v < best) {
            best = v;
            bt = T;
            ba = a;
          }
        }
      tc = bt;
      ac = ba;
      tw /= 4.0;
      aw /= 4.0;
    }
    EXPECT_NEAR(opt.T, tc, 0.05 * tc) << "trial " << trial;
    EXPECT_NEAR(opt.alpha, ac, 0.05 * std::max(std::abs(ac), 0.01)) << "trial " << trial;
  }
}

TEST(WaveformSelection, ExactMatchAndTies) {
  const auto c = WaveformCatalog::grid();
  const auto box = ParamBox::of(c.waveforms());
  const Waveform& w = c.at(17);
  EXPECT_EQ(select_tracked_waveform({w.chirp_rate(), w.pulse_duration_s}, c.waveforms(), box).chirp_rate(),
            w.chirp_rate());
  // Same chirp, different placements: the lowest id wins.
  const int first_same = [&] {
    for (const auto& v : c)
      if (v.bandwidth_hz == w.bandwidth_hz) return v.id;
    return -1;
  }();
  EXPECT_EQ(select_tracked_waveform({w.chirp_rate(), w.pulse_duration_s}, c.waveforms(), box).id, first_same);
}

TEST(WaveformSelection, PenaltyZeroWeight) {
  const auto c = WaveformCatalog::grid();
  const auto box = ParamBox::of(c.waveforms());
  for (const auto& w : c) EXPECT_EQ(tracking_penalty({1e14, 0.5e-6}, w, 0.0, box), 0.0);
  EXPECT_GT(tracking_penalty({1e14, 0.5e-6}, c.at(0), 1.0, box), 0.0);
}

TEST(Rmse, Basics) {
  const std::vector<double> t{1, 2, 3, 4};
  EXPECT_EQ(rmse(t, t), 0.0);
  const std::vector<double> off{6, 7, 8, 9};
  EXPECT_NEAR(rmse(off, t), 5.0, 1e-15);
  Rng rng(4);
  std::vector<double> est, truth;
  for (int i = 0; i < 10000; ++i) {
    truth.push_back(i);
    est.push_back(i + 3.0 * rng.normal());
  }
  EXPECT_NEAR(rmse(est, truth), 3.0, 0.15);
}
