#include "run_config.hpp"

#include <fstream>
#include <vector>

#include "hedgekit/errors.hpp"
#include "hedgekit/rng.hpp"

namespace hedgekit::cli {

namespace {

void check_keys(const nlohmann::json& doc, const nlohmann::json& known, const std::string& where,
                std::vector<std::string>& problems) {
  if (!doc.is_object()) {
    problems.push_back(where + ": expected an object");
    return;
  }
  for (const auto& [key, value] : doc.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!known.contains(key)) {
      problems.push_back("unknown key '" + path + "'");
    } else if (known.at(key).is_object()) {
      check_keys(value, known.at(key), path, problems);
    }
  }
}

template <typename T>
void read(const nlohmann::json& doc, const char* key, T& field) {
  if (doc.contains(key)) field = doc.at(key).get<T>();
}

std::string settlement_name(data::Settlement s) {
  return s == data::Settlement::last_quote ? "last_quote" : "intrinsic_at_expiry";
}

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
  };
  collect([&] { market.validate(); });
  collect([&] { episode.validate(); });
  collect([&] { CostModel{cost_rate}.validate(); });
  collect([&] { train_config().validate(); });
  if (!(risk_aversion >= 0.0)) problems.emplace_back("risk_aversion must be >= 0");
  if (eval_episodes < 2) problems.emplace_back("eval_episodes must be >= 2");
  if (calibration_bins < 2) problems.emplace_back("calibration_bins must be >= 2");
  if (mc_passes_eval < 2) problems.emplace_back("mc_passes_eval must be >= 2");
  if (!(grid.moneyness_step > 0.0) || !(grid.moneyness_hi >= grid.moneyness_lo) ||
      !(grid.moneyness_lo > 0.0)) {
    problems.emplace_back("grid: moneyness bounds must satisfy 0 < lo <= hi with step > 0");
  }
  if (!(grid.tau_step > 0.0) || !(grid.tau_hi >= grid.tau_lo) || !(grid.tau_lo >= 0.0)) {
    problems.emplace_back("grid: tau bounds must satisfy 0 <= lo <= hi with step > 0");
  }
  if (ingest.filter.min_days < 0 || ingest.filter.max_days < ingest.filter.min_days) {
    problems.emplace_back("ingest: need 0 <= min_days <= max_days");
  }
  if (!(ingest.filter.max_moneyness_gap >= 0.0)) {
    problems.emplace_back("ingest: max_moneyness_gap must be >= 0");
  }
  if (output_dir.empty()) problems.emplace_back("output_dir must be set");
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

agent::TrainConfig RunConfig::train_config() const {
  agent::TrainConfig t = train;
  t.risk_aversion = risk_aversion;
  return t;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json train = agent::to_json(c.train);
  train.erase("risk_aversion");
  return {
      {"master_seed", c.master_seed},
      {"market",
       {{"drift", c.market.drift}, {"vol", c.market.vol}, {"initial_price", c.market.initial_price}}},
      {"episode",
       {{"maturity_days", c.episode.maturity_days},
        {"steps_per_day", c.episode.steps_per_day},
        {"days_per_year", c.episode.days_per_year},
        {"history_days", c.episode.history_days}}},
      {"cost_rate", c.cost_rate},
      {"risk_aversion", c.risk_aversion},
      {"train", train},
      {"eval_episodes", c.eval_episodes},
      {"simulate_episodes", c.simulate_episodes},
      {"calibration_samples", c.calibration_samples},
      {"calibration_bins", c.calibration_bins},
      {"grid",
       {{"moneyness_lo", c.grid.moneyness_lo},
        {"moneyness_hi", c.grid.moneyness_hi},
        {"moneyness_step", c.grid.moneyness_step},
        {"tau_lo", c.grid.tau_lo},
        {"tau_hi", c.grid.tau_hi},
        {"tau_step", c.grid.tau_step}}},
      {"mc_passes_eval", c.mc_passes_eval},
      {"ingest",
       {{"min_days", c.ingest.filter.min_days},
        {"max_days", c.ingest.filter.max_days},
        {"max_moneyness_gap", c.ingest.filter.max_moneyness_gap},
        {"allow_gaps", c.ingest.allow_gaps},
        {"settlement", settlement_name(c.ingest.settlement)}}},
      {"output_dir", c.output_dir.generic_string()},
  };
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
  std::vector<std::string> problems;
  check_keys(doc, to_json(RunConfig{}), "", problems);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  RunConfig c;
  try {
    read(doc, "master_seed", c.master_seed);
    if (doc.contains("market")) {
      const auto& m = doc.at("market");
      read(m, "drift", c.market.drift);
      read(m, "vol", c.market.vol);
      read(m, "initial_price", c.market.initial_price);
    }
    if (doc.contains("episode")) {
      const auto& e = doc.at("episode");
      read(e, "maturity_days", c.episode.maturity_days);
      read(e, "steps_per_day", c.episode.steps_per_day);
      read(e, "days_per_year", c.episode.days_per_year);
      read(e, "history_days", c.episode.history_days);
    }
    read(doc, "cost_rate", c.cost_rate);
    read(doc, "risk_aversion", c.risk_aversion);
    if (doc.contains("train")) c.train = agent::train_config_from_json(doc.at("train"));
    read(doc, "eval_episodes", c.eval_episodes);
    read(doc, "simulate_episodes", c.simulate_episodes);
    read(doc, "calibration_samples", c.calibration_samples);
    read(doc, "calibration_bins", c.calibration_bins);
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      read(g, "moneyness_lo", c.grid.moneyness_lo);
      read(g, "moneyness_hi", c.grid.moneyness_hi);
      read(g, "moneyness_step", c.grid.moneyness_step);
      read(g, "tau_lo", c.grid.tau_lo);
      read(g, "tau_hi", c.grid.tau_hi);
      read(g, "tau_step", c.grid.tau_step);
    }
    read(doc, "mc_passes_eval", c.mc_passes_eval);
    if (doc.contains("ingest")) {
      const auto& i = doc.at("ingest");
      read(i, "min_days", c.ingest.filter.min_days);
      read(i, "max_days", c.ingest.filter.max_days);
      read(i, "max_moneyness_gap", c.ingest.filter.max_moneyness_gap);
      read(i, "allow_gaps", c.ingest.allow_gaps);
      if (i.contains("settlement")) {
        const auto s = i.at("settlement").get<std::string>();
        if (s == "last_quote") {
          c.ingest.settlement = data::Settlement::last_quote;
        } else if (s == "intrinsic_at_expiry") {
          c.ingest.settlement = data::Settlement::intrinsic_at_expiry;
        } else {
          throw ConfigError("ingest.settlement must be last_quote or intrinsic_at_expiry");
        }
      }
    }
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

std::uint64_t stream_seed(const RunConfig& config, Stream stream) {
  return derive_seed(config.master_seed, static_cast<std::uint64_t>(stream));
}

nlohmann::json provenance(const RunConfig& config, const std::string& command) {
  // The output location is left out so that identical runs written to
  // different directories produce identical files.
  nlohmann::json cfg = to_json(config);
  cfg.erase("output_dir");
  return {{"tool", "hedgekit"},
          {"version", kToolVersion},
          {"command", command},
          {"config", cfg}};
}

}  // namespace hedgekit::cli
