#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "hedgekit/errors.hpp"

using namespace hedgekit;

namespace {

int exit_code(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::config:
    case Error::Kind::schema:
    case Error::Kind::argument:
    case Error::Kind::format:
      return 2;
    case Error::Kind::io:
      return 3;
    default:
      return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hedgekit: simulate, train and evaluate option hedging agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kToolVersion);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");

  cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Write simulated episodes and a seed manifest");
  simulate->add_option("-n,--episodes", sim.episodes, "Number of episodes");
  simulate->add_flag("--chain", sim.chain, "Also write chain.csv and history.csv");

  std::string variant = "ddpg-uncertainty";
  auto* train = app.add_subcommand("train", "Train an agent and write a checkpoint bundle");
  train->add_option("--variant", variant, "ddpg or ddpg-uncertainty")
      ->check(CLI::IsMember({"ddpg", "ddpg-uncertainty"}));

  cli::EvaluateOptions ev;
  std::vector<std::string> checkpoints;
  std::string episode_store;
  auto* evaluate = app.add_subcommand("evaluate", "Compare strategies against the delta baseline");
  evaluate->add_option("--checkpoint", checkpoints, "name=bundle_dir (repeatable)");
  evaluate->add_flag("--no-hedge", ev.include_no_hedge, "Include the unhedged baseline");
  evaluate->add_flag("--per-step", ev.per_step, "Statistics over step rewards");
  evaluate->add_flag("--dump-trajectories", ev.dump_trajectories, "Write trajectories.csv");
  evaluate->add_option("--episodes", episode_store, "Episode store from ingest")
      ->check(CLI::ExistingFile);

  cli::IngestOptions ing;
  std::string history;
  auto* ingest = app.add_subcommand("ingest", "Ingest an option-chain CSV");
  ingest->add_option("chain", ing.chain, "Chain CSV")->required();
  ingest->add_option("--history", history, "date,close underlier history CSV");

  cli::HeatmapOptions hm;
  auto* heatmap = app.add_subcommand("heatmap", "Model and realized uncertainty heatmaps");
  heatmap->add_option("--checkpoint", hm.checkpoint, "Bundle directory")->required();

  cli::CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Binned uncertainty calibration");
  calibrate->add_option("--checkpoint", cal.checkpoint, "Bundle directory")->required();
  calibrate->add_option("--samples", cal.samples, "Held-out step samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cli::RunConfig config = config_path.empty() ? cli::RunConfig{} : cli::load_run_config(config_path);
    if (seed) config.master_seed = *seed;
    if (!out_dir.empty()) config.output_dir = out_dir;

    if (*simulate) {
      cli::cmd_simulate(config, sim);
    } else if (*train) {
      cli::cmd_train(config, {cli::variant_from_string(variant)});
    } else if (*evaluate) {
      for (const auto& c : checkpoints) {
        const auto eq = c.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == c.size()) {
          throw ConfigError("--checkpoint expects name=dir, got '" + c + "'");
        }
        ev.checkpoints.emplace_back(c.substr(0, eq), c.substr(eq + 1));
      }
      if (!episode_store.empty()) ev.episode_store = episode_store;
      cli::cmd_evaluate(config, ev);
    } else if (*ingest) {
      if (!history.empty()) ing.history = history;
      cli::cmd_ingest(config, ing);
    } else if (*heatmap) {
      cli::cmd_heatmap(config, hm);
    } else if (*calibrate) {
      cli::cmd_calibrate(config, cal);
    }
  } catch (const Error& e) {
    std::cerr << "hedgekit: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "hedgekit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
