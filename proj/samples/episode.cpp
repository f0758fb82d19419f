// Runs one short coexistence episode with Thompson sampling and prints the
// summary plus the last few PRIs.

#include <cstdio>
#include <iostream>

#include "cradar/harness.hpp"

int main() {
  cradar::ExperimentConfig cfg;
  cfg.scenario = cradar::Scenario::coexistence;
  cfg.policy = cradar::PolicyKind::ts;
  cfg.horizon = 1280;
  cfg.d_hat = 0.2;

  const cradar::EpisodeLog log = cradar::run_episode(cfg, 7);
  std::cout << log.summary.to_json().dump(2) << '\n';

  const auto catalog = cfg.catalog.build();
  for (std::size_t i = log.pri.size() - 5; i < log.pri.size(); ++i) {
    const auto& r = log.pri[i];
    const auto& w = catalog.at(r.waveform_id);
    std::printf("t=%zu true=%s waveform=%d (%.0f-%.0f MHz) cost=%.3f oracle=%.3f\n", r.t, r.truth.c_str(),
                r.waveform_id, (w.center_freq_hz - 0.5 * w.bandwidth_hz) / 1e6,
                (w.center_freq_hz + 0.5 * w.bandwidth_hz) / 1e6, r.cost, r.oracle_cost);
  }
}
