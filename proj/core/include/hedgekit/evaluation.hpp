#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hedgekit/ddpg_agent.hpp"
#include "hedgekit/hedge_env.hpp"

namespace hedgekit::eval {

// --- Baselines --------------------------------------------------------------

/// Black-Scholes delta at `vol`, or at the state's implied vol when vol <= 0.
Policy delta_policy(double vol = 0.0);
Policy no_hedge_policy();

// --- P&L distributions -----------------------------------------------------

struct HistogramConfig {
  double lo = -10.0;
  double hi = 2.0;
  int bins = 120;
};

/// Samples outside [lo, hi] land in the first/last bin.
struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

Histogram make_histogram(std::span<const double> samples, const HistogramConfig& config = {});

struct PnlReport {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // n - 1 divisor
  double std = 0.0;
  bool normalized = true;  // each sample divided by its episode premium
  bool per_step = false;
  Histogram histogram;
};

/// Throws ArgumentError for fewer than 2 samples.
PnlReport summarize(std::span<const double> samples, bool normalized, bool per_step,
                    const HistogramConfig& histogram = {});

/// Total P&L per episode, optionally premium-normalised.
std::vector<double> episode_pnls(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                                 const CostModel& cost, bool normalize);
/// Every step reward of every episode, optionally premium-normalised.
std::vector<double> step_rewards(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                                 const CostModel& cost, bool normalize);

PnlReport evaluate_policy(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                          const CostModel& cost, bool normalize = true,
                          const HistogramConfig& histogram = {});
PnlReport per_step_report(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                          const CostModel& cost, bool normalize = true,
                          const HistogramConfig& histogram = {});

nlohmann::json to_json(const PnlReport& report);

// --- Strategy comparison ----------------------------------------------------

struct NamedPolicy {
  std::string name;
  Policy policy;
};

struct StrategyRow {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;
  double std = 0.0;
  double gain_vs_delta = 0.0;
  std::size_t n = 0;
};

struct StrategyTable {
  std::vector<StrategyRow> rows;  // input order
  const StrategyRow& row(const std::string& name) const;
};

/// Requires a strategy named "delta"; gain = mean - mean(delta).
StrategyTable compare_strategies(const std::vector<NamedPolicy>& strategies,
                                 const std::vector<HedgeEpisode>& episodes, const CostModel& cost,
                                 bool normalize = true, bool per_step = false);

// --- Grids ------------------------------------------------------------------

/// lo, lo + step, ..., hi (hi included when it lies on the lattice).
std::vector<double> make_grid(double lo, double hi, double step);

/// State at moneyness m with tau in days; greeks and the vol features at `vol`.
HedgeState grid_state(double moneyness, double tau_days, double position, double vol,
                      double strike = 100.0, double days_per_year = kDefaultDaysPerYear);

struct ActionSlice {
  std::vector<double> moneyness;
  std::vector<double> positions;
  std::vector<std::vector<double>> actions;  // [position][moneyness]
  std::vector<double> delta;                 // BS reference at `vol`
};

ActionSlice action_pattern_slice(const Policy& policy, const std::vector<double>& moneyness,
                                 double tau_days, const std::vector<double>& positions, double vol,
                                 double strike = 100.0);

struct HeatmapGrid {
  std::vector<double> moneyness;
  std::vector<double> tau_days;
  std::vector<std::vector<double>> values;       // [moneyness][tau], NaN when missing
  std::vector<std::vector<std::size_t>> counts;  // samples behind each cell

  bool missing(std::size_t i, std::size_t j) const { return counts[i][j] == 0; }
};

/// Mean sigma^2 of the actor's variance head with position held at BS delta.
HeatmapGrid uncertainty_heatmap(const agent::Actor& actor, const std::vector<double>& moneyness,
                                const std::vector<double>& tau_days, double vol,
                                double strike = 100.0);

/// MC-dropout Var(Q(s, pi(s))) over the same grid; identically 0 without dropout.
HeatmapGrid epistemic_heatmap(const agent::Actor& actor, const agent::Critic& critic,
                              const std::vector<double>& moneyness,
                              const std::vector<double>& tau_days, double vol, int passes,
                              std::uint64_t seed, double strike = 100.0);

/// Sample variance of step rewards bucketed by the nearest grid point of
/// (moneyness, tau in days) at the start of the step. Cells with fewer than
/// two samples are missing (NaN, count kept).
HeatmapGrid realized_variance_heatmap(const Policy& policy,
                                      const std::vector<HedgeEpisode>& episodes,
                                      const CostModel& cost, const std::vector<double>& moneyness,
                                      const std::vector<double>& tau_days, bool normalize = true);

/// Mean over non-missing cells with lo <= |m - 1| <= hi and tau <= max_tau_days.
double region_mean(const HeatmapGrid& grid, double min_gap, double max_gap, double max_tau_days);

// --- Calibration ------------------------------------------------------------

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  double mean_sigma2 = 0.0;
  double realized_var = 0.0;  // NaN with fewer than 2 samples
  bool tied_boundary = false;  // shares a sigma^2 value with the next bin
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  std::size_t n = 0;
  double spearman = 0.0;  // NaN when undefined
  bool defined() const;
};

/// Equal-count bins by predicted sigma^2; Spearman (average ranks) between bin
/// mean sigma^2 and bin realized variance. Throws ArgumentError when there are
/// fewer samples than bins or k < 2.
CalibrationReport calibration_bins(std::span<const double> sigma2, std::span<const double> rewards,
                                   int k = 7);

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct CalibrationSamples {
  std::vector<double> sigma2;
  std::vector<double> rewards;
};

/// (sigma^2(s_t), R_t) along the actor's own greedy trajectories.
CalibrationSamples collect_calibration_samples(const agent::Actor& actor,
                                               const std::vector<HedgeEpisode>& episodes,
                                               const CostModel& cost, bool normalize = true);

}  // namespace hedgekit::eval
