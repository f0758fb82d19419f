// Command-line front end: run, campaign, sweep-dhat, replay, validate-config.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cradar/config.hpp"
#include "cradar/errors.hpp"
#include "cradar/harness.hpp"

namespace {

using cradar::json;

struct Overrides {
  std::string scenario;
  std::string policy;
  std::string seeds;
  std::optional<std::size_t> horizon;
  std::string dhat;
  std::string out;
  std::optional<int> workers;

  void attach(CLI::App* app) {
    app->add_option("--scenario", scenario, "coexistence | jammer | synthetic-linear");
    app->add_option("--policy", policy, "ts | exp3 | reactive | fixed");
    app->add_option("--seeds", seeds, "comma list or range, e.g. 1-10");
    app->add_option("--horizon", horizon, "PRIs per episode");
    app->add_option("--dhat", dhat, "distortion bound or 'none'");
    app->add_option("--out", out, "output root");
    app->add_option("--workers", workers, "worker threads (0 = hardware)");
  }

  void apply(cradar::ExperimentConfig& c) const {
    if (!scenario.empty()) c.scenario = cradar::parse_scenario(scenario);
    if (!policy.empty()) c.policy = cradar::parse_policy(policy);
    if (!seeds.empty()) c.seeds = parse_seeds(seeds);
    if (horizon) c.horizon = *horizon;
    if (!dhat.empty()) c.d_hat = parse_dhat(dhat);
    if (!out.empty()) c.out = out;
    if (workers) c.workers = *workers;
  }

  static std::optional<double> parse_dhat(const std::string& s) {
    if (s == "none") return std::nullopt;
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw cradar::ConfigError("d_hat", "expected a number or 'none', got '" + s + "'");
    }
  }

  static std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    try {
      while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
          out.push_back(std::stoull(item));
        } else {
          const auto lo = std::stoull(item.substr(0, dash));
          const auto hi = std::stoull(item.substr(dash + 1));
          if (hi < lo) throw cradar::ConfigError("seeds", "empty range '" + item + "'");
          for (auto k = lo; k <= hi; ++k) out.push_back(k);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    } catch (const std::invalid_argument&) {
      throw cradar::ConfigError("seeds", "cannot parse '" + s + "'");
    } catch (const std::out_of_range&) {
      throw cradar::ConfigError("seeds", "cannot parse '" + s + "'");
    }
    return out;
  }
};

cradar::ExperimentConfig load(const std::string& path, const Overrides& o) {
  cradar::ExperimentConfig c = path.empty() ? cradar::ExperimentConfig{} : cradar::load_config(path);
  o.apply(c);
  c.validate();
  return c;
}

int fail(const std::string& kind, const std::string& message, const std::string& field = "") {
  json e{{"error", kind}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  std::cerr << e.dump() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cognitive radar waveform-selection simulator"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  auto* run = app.add_subcommand("run", "run one episode and write its logs");
  run->add_option("-c,--config", config_path, "JSON config");
  ov.attach(run);

  auto* campaign = app.add_subcommand("campaign", "run every configured seed and aggregate");
  campaign->add_option("-c,--config", config_path, "JSON config");
  ov.attach(campaign);

  std::vector<std::string> sweep_values;
  auto* sweep = app.add_subcommand("sweep-dhat", "one campaign per distortion bound");
  sweep->add_option("-c,--config", config_path, "JSON config");
  sweep->add_option("--values", sweep_values, "bounds, e.g. 0.05,0.1,0.2,none")->required()->expected(2, -1)->delimiter(',');
  ov.attach(sweep);

  std::string replay_dir;
  auto* replay = app.add_subcommand("replay", "recompute costs and regret from an episode directory");
  replay->add_option("dir", replay_dir, "episode directory (contains pri.csv and summary.json)")->required();

  auto* validate = app.add_subcommand("validate-config", "parse and validate a config");
  validate->add_option("config", config_path, "JSON config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      auto c = load(config_path, ov);
      const auto log = cradar::run_episode(c, c.seeds.front());
      const auto dir = cradar::write_episode(log);
      std::cout << json{{"dir", dir.string()}, {"summary", log.summary.to_json()}}.dump(2) << '\n';
    } else if (*campaign) {
      auto c = load(config_path, ov);
      const auto r = cradar::run_campaign(c);
      std::cout << r.summary.dump(2) << '\n';
      if (r.summary.at("failed").get<long>() > 0) return 1;
    } else if (*sweep) {
      auto c = load(config_path, ov);
      std::vector<std::optional<double>> values;
      for (const auto& v : sweep_values) values.push_back(Overrides::parse_dhat(v));
      json rows = json::array();
      for (const auto& r : cradar::sweep_dhat(c, values))
        rows.push_back({{"d_hat", r.d_hat ? json(*r.d_hat) : json("none")},
                        {"terminal_average_cost", r.terminal_average_cost},
                        {"peak_sidelobe_db", r.peak_sidelobe_db},
                        {"seeds_ok", r.seeds_ok}});
      std::cout << rows.dump(2) << '\n';
    } else if (*replay) {
      const json r = cradar::replay(replay_dir);
      std::cout << r.dump(2) << '\n';
      if (!r.at("consistent").get<bool>()) return 1;
    } else if (*validate) {
      const auto c = load(config_path, ov);
      std::cout << json{{"valid", true}, {"config", cradar::to_json(c)}}.dump(2) << '\n';
    }
  } catch (const cradar::ConfigError& e) {
    return fail("config", e.what(), e.field());
  } catch (const cradar::DomainError& e) {
    return fail("domain", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
