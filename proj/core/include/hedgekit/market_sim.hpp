#pragma once

#include <cstdint>
#include <vector>

#include "hedgekit/option_analytics.hpp"

namespace hedgekit {

struct GbmParams {
  double drift = 0.05;
  double vol = 0.20;
  double initial_price = 100.0;

  void validate() const;
};

struct PricePath {
  std::vector<double> times;   // years from the first node
  std::vector<double> prices;
  std::uint64_t seed = 0;
};

struct EpisodeConfig {
  int maturity_days = 30;
  int steps_per_day = 1;
  double days_per_year = kDefaultDaysPerYear;
  /// Daily closes simulated before the first node so trailing-window vol
  /// features are defined from step 0.
  int history_days = 30;

  void validate() const;
};

/// One hedging episode on a uniform grid. Node i carries the stock price, the
/// option mark, the remaining maturity and the volatility features observable
/// at that node. Simulated and ingested episodes share this type; for ingested
/// ones `option_prices` are market mids and `simulated` is false.
struct HedgeEpisode {
  PricePath path;
  OptionSpec spec;                   // time_to_maturity is tau at node 0
  std::vector<double> option_prices;
  std::vector<double> taus;          // years remaining at each node
  std::vector<double> implied_vols;  // per node
  std::vector<double> hist_vol_20;   // per node, NaN when history is short
  std::vector<double> hist_vol_30;
  std::vector<double> history_closes;  // daily closes before node 0, ending at S0
  int steps_per_day = 1;
  double premium = 0.0;              // option_prices[0]
  double days_per_year = kDefaultDaysPerYear;
  bool simulated = true;

  std::size_t nodes() const { return path.prices.size(); }
  std::size_t steps() const { return nodes() - 1; }
};

/// Exact log-normal stepping S_{t+dt} = S_t exp((mu - vol^2/2) dt + vol sqrt(dt) Z).
/// If horizon is not a multiple of dt the last step is shortened.
PricePath simulate_gbm(const GbmParams& params, double horizon, double dt, std::uint64_t seed);

/// At-the-money call (K = S0) expiring after `maturity_days`, marked with
/// Black-Scholes at the simulation vol on every node.
HedgeEpisode generate_episode(const GbmParams& params, const EpisodeConfig& config,
                              std::uint64_t seed);

/// Episodes `first .. first + count - 1` of the stream rooted at `master_seed`.
std::vector<HedgeEpisode> generate_episodes(const GbmParams& params, const EpisodeConfig& config,
                                            std::uint64_t master_seed, std::size_t count,
                                            std::size_t first = 0);

/// Trailing-window vol features for an episode from daily closes. `closes`
/// holds the history followed by the close of each elapsed day; node i sees
/// the first `history + i / steps_per_day + 1` entries.
void attach_history_features(HedgeEpisode& episode, const std::vector<double>& history_closes);

}  // namespace hedgekit
