#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hedgekit/market_sim.hpp"
#include "run_config.hpp"

namespace hedgekit::cli {

struct SimulateOptions {
  std::optional<std::size_t> episodes;  // overrides simulate_episodes
  bool chain = false;  // also write chain.csv + history.csv (daily episodes only)
};
void cmd_simulate(const RunConfig& config, const SimulateOptions& options);

enum class Variant { ddpg, ddpg_uncertainty };
Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

/// Variant contract: ddpg freezes the log-variance head at 0, sets dropout
/// to 0 and drops the epistemic penalty.
agent::TrainConfig variant_config(const RunConfig& config, Variant variant);

struct TrainOptions {
  Variant variant = Variant::ddpg_uncertainty;
};
void cmd_train(const RunConfig& config, const TrainOptions& options);

struct EvaluateOptions {
  std::vector<std::pair<std::string, std::filesystem::path>> checkpoints;  // name -> bundle
  bool include_no_hedge = false;
  bool per_step = false;
  bool dump_trajectories = false;
  std::optional<std::filesystem::path> episode_store;  // episodes.json from ingest
};
void cmd_evaluate(const RunConfig& config, const EvaluateOptions& options);

struct IngestOptions {
  std::filesystem::path chain;
  std::optional<std::filesystem::path> history;
};
void cmd_ingest(const RunConfig& config, const IngestOptions& options);

struct HeatmapOptions {
  std::filesystem::path checkpoint;
};
void cmd_heatmap(const RunConfig& config, const HeatmapOptions& options);

struct CalibrateOptions {
  std::filesystem::path checkpoint;
  std::optional<std::size_t> samples;  // overrides calibration_samples
};
void cmd_calibrate(const RunConfig& config, const CalibrateOptions& options);

/// Episode store used between ingest and evaluate. NaN is written as null.
nlohmann::json episodes_to_json(const std::vector<HedgeEpisode>& episodes);
std::vector<HedgeEpisode> episodes_from_json(const nlohmann::json& doc);

}  // namespace hedgekit::cli
