#include <gtest/gtest.h>

#include <cmath>

#include "cradar/errors.hpp"
#include "cradar/waveforms.hpp"

using namespace cradar;

namespace {

Waveform make(int id, double center, double bw, double T = 0.5e-6) {
  Waveform w;
  w.id = id;
  w.center_freq_hz = center;
  w.bandwidth_hz = bw;
  w.pulse_duration_s = T;
  return w;
}

}  // namespace

TEST(Distortion, IdentityIsZero) {
  const auto g = DistortionWeights::for_channel(100e6);
  const auto w = make(0, 30e6, 20e6);
  EXPECT_EQ(distortion(w, w, g), 0.0);
}

TEST(Distortion, TenMegahertzShift) {
  const auto g = DistortionWeights::for_channel(100e6);
  EXPECT_NEAR(distortion(make(0, 30e6, 20e6), make(1, 40e6, 20e6), g), 0.005, 1e-15);
}

TEST(Distortion, ExtremesGiveOne) {
  const auto g = DistortionWeights::for_channel(100e6);
  EXPECT_NEAR(distortion(make(0, 0.0, 0.0), make(1, 100e6, 100e6), g), 1.0, 1e-15);
}

TEST(Distortion, Symmetric) {
  const auto g = DistortionWeights::for_channel(100e6);
  const auto a = make(0, 25e6, 50e6), b = make(1, 70e6, 20e6);
  EXPECT_EQ(distortion(a, b, g), distortion(b, a, g));
}

TEST(Catalog, GridShape) {
  const auto c = WaveformCatalog::grid();
  ASSERT_EQ(c.size(), 55u);
  EXPECT_EQ(c.at(0).bandwidth_hz, 10e6);
  EXPECT_EQ(c.at(0).center_freq_hz, 5e6);
  EXPECT_EQ(c.at(54).bandwidth_hz, 100e6);
  EXPECT_EQ(c.at(54).center_freq_hz, 50e6);
  EXPECT_EQ(c.widest().id, 54);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].id, static_cast<int>(i));
}

TEST(Catalog, OccupancyMaskUsesSubchannelCenters) {
  const auto c = WaveformCatalog::grid();
  // [0, 20] MHz covers the centers at 5 and 15 MHz.
  int id = -1;
  for (const auto& w : c)
    if (w.bandwidth_hz == 20e6 && w.center_freq_hz == 10e6) id = w.id;
  ASSERT_GE(id, 0);
  EXPECT_EQ(c.occupancy_mask(id), 0b11u);
  EXPECT_EQ(c.occupancy_mask(54), 0x3FFu);
}

TEST(Catalog, LiteralConventionDoublesBand) {
  std::vector<Waveform> ws{make(0, 50e6, 10e6), make(1, 50e6, 40e6)};
  const WaveformCatalog lit(ws, 100e6, 10, OccupancyConvention::literal);
  // [40, 60] MHz covers centers 45 and 55.
  EXPECT_EQ(lit.occupancy_mask(0), 0b0000110000u);
}

TEST(Catalog, RejectsBadInput) {
  EXPECT_THROW(WaveformCatalog({make(0, 50e6, 10e6)}, 100e6, 10), ConfigError);
  EXPECT_THROW(WaveformCatalog({make(0, 50e6, 10e6), make(2, 40e6, 10e6)}, 100e6, 10), ConfigError);
  EXPECT_THROW(WaveformCatalog({make(0, 50e6, 10e6), make(1, 95e6, 20e6)}, 100e6, 10), ConfigError);
  EXPECT_THROW(WaveformCatalog({make(0, 50e6, 10e6), make(1, 40e6, 10e6, 0.0)}, 100e6, 10), ConfigError);
  EXPECT_THROW(WaveformCatalog({make(0, 50e6, 10e6), make(1, 40e6, 10e6)}, 100e6, 0), ConfigError);
  EXPECT_THROW(WaveformCatalog::grid(100e6, 10, 30e6), ConfigError);
}

TEST(Catalog, NarrowbandAssumptionEnforced) {
  // Absolute centre = carrier + 50 MHz - 50 MHz = 60 MHz < bandwidth 100 MHz.
  EXPECT_THROW(WaveformCatalog({make(0, 50e6, 10e6), make(1, 50e6, 100e6)}, 100e6, 10,
                               OccupancyConvention::centered, 60e6),
               ConfigError);
}

TEST(Catalog, JsonRoundTrip) {
  const auto c = WaveformCatalog::grid();
  const auto back = catalog_from_json(to_json(c));
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(back[i], c[i]);
  EXPECT_EQ(back.num_subchannels(), 10);
  EXPECT_THROW(catalog_from_json(nlohmann::json{{"num_subchannels", 10}}), ConfigError);
}

TEST(ConstrainedCatalog, FullCatalogAtDhatOne) {
  const auto c = WaveformCatalog::grid();
  // Every in-band pair has D < 1 except the two extreme corners, which the
  // grid does not contain.
  EXPECT_EQ(constrained_catalog(c, c.at(27), 1.0).size(), c.size());
}

TEST(ConstrainedCatalog, MatchesBruteForce) {
  const auto c = WaveformCatalog::grid();
  for (int prev : {0, 12, 27, 40, 54}) {
    const auto got = constrained_catalog(c, c.at(prev), 0.2);
    std::vector<int> expect;
    for (const auto& w : c) {
      // Integer MHz: D < 0.2 <=> df^2 + dbw^2 < 0.4 * 100^2.
      const long df = std::lround((w.center_freq_hz - c.at(prev).center_freq_hz) / 1e6);
      const long db = std::lround((w.bandwidth_hz - c.at(prev).bandwidth_hz) / 1e6);
      if (df * df + db * db < 4000) expect.push_back(w.id);
    }
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].id, expect[i]);
  }
}

TEST(ConstrainedCatalog, TinyBoundKeepsOnlyPrevious) {
  const auto c = WaveformCatalog::grid();
  const auto got = constrained_catalog(c, c.at(20), 1e-12);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].id, 20);
}

TEST(ConstrainedCatalog, AlwaysContainsPrevious) {
  const auto c = WaveformCatalog::grid();
  for (const auto& prev : c)
    for (double d : {1e-9, 0.01, 0.2, 0.9}) {
      const auto got = constrained_catalog(c, prev, d);
      EXPECT_TRUE(std::any_of(got.begin(), got.end(), [&](const Waveform& w) { return w.id == prev.id; }));
    }
}
