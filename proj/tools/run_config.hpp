#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "hedgekit/data_pipeline.hpp"
#include "hedgekit/ddpg_agent.hpp"
#include "hedgekit/market_sim.hpp"

namespace hedgekit::cli {

inline constexpr const char* kToolVersion = "0.3.0";

struct GridConfig {
  double moneyness_lo = 0.8;
  double moneyness_hi = 1.2;
  double moneyness_step = 0.01;
  double tau_lo = 1.0;
  double tau_hi = 30.0;
  double tau_step = 1.0;
};

struct IngestConfig {
  data::UniverseFilter filter;
  bool allow_gaps = false;
  data::Settlement settlement = data::Settlement::last_quote;
};

struct RunConfig {
  std::uint64_t master_seed = 20240601;
  GbmParams market;
  EpisodeConfig episode;
  double cost_rate = 0.01;
  double risk_aversion = 20.0;
  agent::TrainConfig train;
  std::size_t eval_episodes = 5000;
  std::size_t simulate_episodes = 10;
  std::size_t calibration_samples = 10000;
  int calibration_bins = 7;
  GridConfig grid;
  int mc_passes_eval = 30;
  IngestConfig ingest;
  std::filesystem::path output_dir = "runs/default";

  /// Every problem in one ConfigError.
  void validate() const;

  /// Training config with the run-level risk aversion applied.
  agent::TrainConfig train_config() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Independent seed streams derived from the master seed.
enum class Stream : std::uint64_t { simulate = 1, train_episodes = 2, agent = 3, eval = 4, calibration = 5, mc = 6 };
std::uint64_t stream_seed(const RunConfig& config, Stream stream);

/// {tool, version, command, config} embedded in every report. The config
/// omits output_dir.
nlohmann::json provenance(const RunConfig& config, const std::string& command);

}  // namespace hedgekit::cli
