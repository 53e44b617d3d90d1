#include "hedgekit/market_sim.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include "hedgekit/data_pipeline.hpp"
#include "hedgekit/errors.hpp"
#include "hedgekit/rng.hpp"

namespace hedgekit {

void GbmParams::validate() const {
  if (!(vol >= 0.0) || !std::isfinite(vol)) throw DomainError("GBM vol must be >= 0");
  if (!(initial_price > 0.0) || !std::isfinite(initial_price)) {
    throw DomainError("GBM initial price must be > 0");
  }
  if (!std::isfinite(drift)) throw DomainError("GBM drift must be finite");
}

void EpisodeConfig::validate() const {
  if (maturity_days < 1 || maturity_days > 365) {
    throw DomainError("maturity_days must be in [1, 365], got " + std::to_string(maturity_days));
  }
  if (steps_per_day < 1) throw DomainError("steps_per_day must be >= 1");
  if (!(days_per_year > 0.0)) throw DomainError("days_per_year must be > 0");
  if (history_days < 0) throw DomainError("history_days must be >= 0");
}

PricePath simulate_gbm(const GbmParams& params, double horizon, double dt, std::uint64_t seed) {
  params.validate();
  if (!(dt > 0.0)) throw DomainError("simulate_gbm: dt must be > 0");
  if (!(horizon > 0.0)) throw DomainError("simulate_gbm: horizon must be > 0");
  if (dt > horizon) throw DomainError("simulate_gbm: dt must not exceed horizon");

  const auto n_steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  PricePath path;
  path.seed = seed;
  path.times.resize(n_steps + 1);
  path.prices.resize(n_steps + 1);
  path.times[0] = 0.0;
  path.prices[0] = params.initial_price;

  Rng rng(seed);
  const double log_s0 = std::log(params.initial_price);
  double log_s = 0.0;
  for (std::size_t i = 1; i <= n_steps; ++i) {
    const double t = i == n_steps ? horizon : static_cast<double>(i) * dt;
    const double h = t - path.times[i - 1];
    const double z = rng.normal();
    log_s += (params.drift - 0.5 * params.vol * params.vol) * h + params.vol * std::sqrt(h) * z;
    path.times[i] = t;
    path.prices[i] = std::exp(log_s0 + log_s);
  }
  return path;
}

void attach_history_features(HedgeEpisode& episode, const std::vector<double>& history_closes) {
  const std::size_t n = episode.nodes();
  episode.hist_vol_20.assign(n, std::numeric_limits<double>::quiet_NaN());
  episode.hist_vol_30.assign(n, std::numeric_limits<double>::quiet_NaN());

  // Daily closes: history (ending at S0), then the close of every elapsed day.
  std::vector<double> closes = history_closes;
  if (closes.empty() || closes.back() != episode.path.prices.front()) {
    closes.push_back(episode.path.prices.front());
  }
  const std::size_t base = closes.size();
  const auto spd = static_cast<std::size_t>(episode.steps_per_day);
  for (std::size_t node = spd; node < n; node += spd) closes.push_back(episode.path.prices[node]);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t visible = base + i / spd;
    const std::span<const double> window(closes.data(), visible);
    if (visible >= 21) episode.hist_vol_20[i] = data::historical_vol(window, 20);
    if (visible >= 31) episode.hist_vol_30[i] = data::historical_vol(window, 30);
  }
}

HedgeEpisode generate_episode(const GbmParams& params, const EpisodeConfig& config,
                              std::uint64_t seed) {
  params.validate();
  config.validate();

  const double horizon = years_from_days(config.maturity_days, config.days_per_year);
  const double dt = 1.0 / (config.days_per_year * config.steps_per_day);
  const std::size_t n_steps =
      static_cast<std::size_t>(config.maturity_days) * static_cast<std::size_t>(config.steps_per_day);

  HedgeEpisode ep;
  ep.path = simulate_gbm(params, horizon, dt, seed);
  ep.steps_per_day = config.steps_per_day;
  ep.days_per_year = config.days_per_year;
  ep.spec.strike = params.initial_price;
  ep.spec.time_to_maturity = horizon;
  ep.spec.rate = 0.0;
  ep.simulated = true;

  const std::size_t n = ep.path.prices.size();
  ep.taus.resize(n);
  ep.option_prices.resize(n);
  ep.implied_vols.assign(n, params.vol);
  for (std::size_t i = 0; i < n; ++i) {
    // Integer step counts keep tau exact on the grid: tau_i = (N - i) dt.
    ep.taus[i] = static_cast<double>(n_steps - i) / (config.days_per_year * config.steps_per_day);
    OptionSpec spec = ep.spec;
    spec.time_to_maturity = ep.taus[i];
    ep.option_prices[i] = bs_call_price(ep.path.prices[i], spec, params.vol);
  }
  ep.premium = ep.option_prices.front();

  // Pre-episode daily closes on an independent stream, rescaled to end at S0.
  std::vector<double> history;
  if (config.history_days > 0) {
    const PricePath pre = simulate_gbm(
        params, years_from_days(config.history_days, config.days_per_year),
        1.0 / config.days_per_year, derive_seed(seed, 1));
    const double scale = params.initial_price / pre.prices.back();
    history.reserve(pre.prices.size());
    for (double p : pre.prices) history.push_back(p * scale);
    history.back() = params.initial_price;
  }
  attach_history_features(ep, history);
  ep.history_closes = std::move(history);
  return ep;
}

std::vector<HedgeEpisode> generate_episodes(const GbmParams& params, const EpisodeConfig& config,
                                            std::uint64_t master_seed, std::size_t count,
                                            std::size_t first) {
  std::vector<HedgeEpisode> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate_episode(params, config, derive_seed(master_seed, first + i)));
  }
  return out;
}

}  // namespace hedgekit
