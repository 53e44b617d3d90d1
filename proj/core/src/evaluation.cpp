#include "hedgekit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hedgekit/errors.hpp"
#include "hedgekit/option_analytics.hpp"

namespace hedgekit::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Welford; n - 1 divisor.
Moments moments(std::span<const double> xs) {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  return {mean, n > 1 ? m2 / static_cast<double>(n - 1) : kNaN};
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::ptrdiff_t nearest_index(const std::vector<double>& grid, double x) {
  if (grid.empty()) return -1;
  if (grid.size() == 1) return x == grid.front() ? 0 : -1;
  const double step = grid[1] - grid[0];
  const double pos = (x - grid.front()) / step;
  const auto i = static_cast<std::ptrdiff_t>(std::floor(pos + 0.5));
  if (i < 0 || i >= static_cast<std::ptrdiff_t>(grid.size())) return -1;
  return i;
}

HeatmapGrid empty_grid(const std::vector<double>& moneyness, const std::vector<double>& tau_days) {
  if (moneyness.empty() || tau_days.empty()) throw ArgumentError("heatmap grids must be nonempty");
  HeatmapGrid g;
  g.moneyness = moneyness;
  g.tau_days = tau_days;
  g.values.assign(moneyness.size(), std::vector<double>(tau_days.size(), kNaN));
  g.counts.assign(moneyness.size(), std::vector<std::size_t>(tau_days.size(), 0));
  return g;
}

}  // namespace

Policy delta_policy(double vol) {
  return [vol](const HedgeState& s) {
    OptionSpec spec;
    spec.strike = s.strike;
    spec.time_to_maturity = s.tau;
    return bs_delta(s.spot, spec, vol > 0.0 ? vol : s.vols.implied);
  };
}

Policy no_hedge_policy() {
  return [](const HedgeState&) { return 0.0; };
}

Histogram make_histogram(std::span<const double> samples, const HistogramConfig& config) {
  if (config.bins < 1 || !(config.hi > config.lo)) throw ArgumentError("bad histogram config");
  Histogram h;
  const auto bins = static_cast<std::size_t>(config.bins);
  h.edges.resize(bins + 1);
  const double width = (config.hi - config.lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = config.lo + width * static_cast<double>(i);
  h.edges.back() = config.hi;
  h.counts.assign(bins, 0);
  for (double x : samples) {
    auto i = static_cast<std::ptrdiff_t>(std::floor((x - config.lo) / width));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(i)];
  }
  return h;
}

PnlReport summarize(std::span<const double> samples, bool normalized, bool per_step,
                    const HistogramConfig& histogram) {
  if (samples.size() < 2) throw ArgumentError("P&L report needs at least 2 samples");
  const Moments m = moments(samples);
  PnlReport r;
  r.n = samples.size();
  r.mean = m.mean;
  r.variance = m.variance;
  r.std = std::sqrt(m.variance);
  r.normalized = normalized;
  r.per_step = per_step;
  r.histogram = make_histogram(samples, histogram);
  return r;
}

std::vector<double> episode_pnls(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                                 const CostModel& cost, bool normalize) {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const auto& ep : episodes) {
    const double pnl = rollout_pnl(ep, policy, cost);
    out.push_back(normalize ? pnl / ep.premium : pnl);
  }
  return out;
}

std::vector<double> step_rewards(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                                 const CostModel& cost, bool normalize) {
  std::vector<double> out;
  for (const auto& ep : episodes) {
    const RolloutResult r = rollout(ep, policy, cost);
    for (const auto& t : r.transitions) out.push_back(normalize ? t.reward / ep.premium : t.reward);
  }
  return out;
}

PnlReport evaluate_policy(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                          const CostModel& cost, bool normalize, const HistogramConfig& histogram) {
  if (episodes.size() < 2) throw ArgumentError("evaluate_policy needs at least 2 episodes");
  const auto pnls = episode_pnls(policy, episodes, cost, normalize);
  return summarize(pnls, normalize, false, histogram);
}

PnlReport per_step_report(const Policy& policy, const std::vector<HedgeEpisode>& episodes,
                          const CostModel& cost, bool normalize, const HistogramConfig& histogram) {
  if (episodes.empty()) throw ArgumentError("per_step_report needs episodes");
  const auto rewards = step_rewards(policy, episodes, cost, normalize);
  return summarize(rewards, normalize, true, histogram);
}

nlohmann::json to_json(const PnlReport& r) {
  return {{"n", r.n},
          {"mean", r.mean},
          {"variance", r.variance},
          {"std", r.std},
          {"normalization", r.normalized ? "premium" : "none"},
          {"sample_unit", r.per_step ? "step" : "episode"},
          {"histogram", {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}}}};
}

const StrategyRow& StrategyTable::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw ArgumentError("no strategy named '" + name + "'");
}

StrategyTable compare_strategies(const std::vector<NamedPolicy>& strategies,
                                 const std::vector<HedgeEpisode>& episodes, const CostModel& cost,
                                 bool normalize, bool per_step) {
  const bool has_delta = std::any_of(strategies.begin(), strategies.end(),
                                     [](const NamedPolicy& p) { return p.name == "delta"; });
  if (!has_delta) throw ArgumentError("compare_strategies requires a strategy named 'delta'");
  StrategyTable table;
  for (const auto& s : strategies) {
    const PnlReport r = per_step ? per_step_report(s.policy, episodes, cost, normalize)
                                 : evaluate_policy(s.policy, episodes, cost, normalize);
    table.rows.push_back({s.name, r.mean, r.variance, r.std, 0.0, r.n});
  }
  const double base = table.row("delta").mean;
  for (auto& r : table.rows) r.gain_vs_delta = r.name == "delta" ? 0.0 : r.mean - base;
  return table;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ArgumentError("bad grid bounds");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  return g;
}

HedgeState grid_state(double moneyness, double tau_days, double position, double vol,
                      double strike, double days_per_year) {
  HedgeState s;
  s.strike = strike;
  s.spot = moneyness * strike;
  s.moneyness = moneyness;
  s.tau = tau_days / days_per_year;
  s.position = position;
  s.days_per_year = days_per_year;
  s.vols = {vol, vol, vol};
  OptionSpec spec;
  spec.strike = strike;
  spec.time_to_maturity = s.tau;
  if (s.tau > 0.0 && vol > 0.0) {
    s.greeks = bs_greeks(s.spot, spec, vol);
  } else {
    s.greeks.delta = bs_delta(s.spot, spec, vol);
  }
  return s;
}

ActionSlice action_pattern_slice(const Policy& policy, const std::vector<double>& moneyness,
                                 double tau_days, const std::vector<double>& positions, double vol,
                                 double strike) {
  ActionSlice out;
  out.moneyness = moneyness;
  out.positions = positions;
  for (double m : moneyness) out.delta.push_back(grid_state(m, tau_days, 0.0, vol, strike).greeks.delta);
  for (double p : positions) {
    std::vector<double> curve;
    curve.reserve(moneyness.size());
    for (double m : moneyness) curve.push_back(policy(grid_state(m, tau_days, p, vol, strike)));
    out.actions.push_back(std::move(curve));
  }
  return out;
}

HeatmapGrid uncertainty_heatmap(const agent::Actor& actor, const std::vector<double>& moneyness,
                                const std::vector<double>& tau_days, double vol, double strike) {
  HeatmapGrid g = empty_grid(moneyness, tau_days);
  for (std::size_t i = 0; i < moneyness.size(); ++i) {
    for (std::size_t j = 0; j < tau_days.size(); ++j) {
      HedgeState s = grid_state(moneyness[i], tau_days[j], 0.0, vol, strike);
      s.position = s.greeks.delta;
      g.values[i][j] = actor.sigma2(encode_state(s));
      g.counts[i][j] = 1;
    }
  }
  return g;
}

HeatmapGrid epistemic_heatmap(const agent::Actor& actor, const agent::Critic& critic,
                              const std::vector<double>& moneyness,
                              const std::vector<double>& tau_days, double vol, int passes,
                              std::uint64_t seed, double strike) {
  HeatmapGrid g = empty_grid(moneyness, tau_days);
  const auto cells = static_cast<Eigen::Index>(moneyness.size() * tau_days.size());
  agent::Matrix states(static_cast<Eigen::Index>(kStateDim), cells);
  agent::Vector actions(cells);
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < moneyness.size(); ++i) {
    for (std::size_t j = 0; j < tau_days.size(); ++j, ++c) {
      HedgeState s = grid_state(moneyness[i], tau_days[j], 0.0, vol, strike);
      s.position = s.greeks.delta;
      const StateVector v = encode_state(s);
      for (std::size_t k = 0; k < kStateDim; ++k) states(static_cast<Eigen::Index>(k), c) = v[k];
      actions(c) = actor.act(v);
    }
  }
  const agent::Vector var = agent::epistemic_q_variance(critic, states, actions, passes, seed);
  c = 0;
  for (std::size_t i = 0; i < moneyness.size(); ++i) {
    for (std::size_t j = 0; j < tau_days.size(); ++j, ++c) {
      g.values[i][j] = var(c);
      g.counts[i][j] = 1;
    }
  }
  return g;
}

HeatmapGrid realized_variance_heatmap(const Policy& policy,
                                      const std::vector<HedgeEpisode>& episodes,
                                      const CostModel& cost, const std::vector<double>& moneyness,
                                      const std::vector<double>& tau_days, bool normalize) {
  HeatmapGrid g = empty_grid(moneyness, tau_days);
  std::vector<std::vector<std::vector<double>>> buckets(
      moneyness.size(), std::vector<std::vector<double>>(tau_days.size()));
  for (const auto& ep : episodes) {
    const RolloutResult r = rollout(ep, policy, cost);
    for (const auto& t : r.transitions) {
      const auto i = nearest_index(moneyness, t.state.moneyness);
      const auto j = nearest_index(tau_days, t.state.tau * t.state.days_per_year);
      if (i < 0 || j < 0) continue;
      buckets[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].push_back(
          normalize ? t.reward / ep.premium : t.reward);
    }
  }
  for (std::size_t i = 0; i < moneyness.size(); ++i) {
    for (std::size_t j = 0; j < tau_days.size(); ++j) {
      const auto& b = buckets[i][j];
      g.counts[i][j] = b.size();
      if (b.size() >= 2) {
        g.values[i][j] = moments(b).variance;
      } else {
        g.counts[i][j] = 0;
      }
    }
  }
  return g;
}

double region_mean(const HeatmapGrid& grid, double min_gap, double max_gap, double max_tau_days) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < grid.moneyness.size(); ++i) {
    const double gap = std::abs(grid.moneyness[i] - 1.0);
    if (gap < min_gap - 1e-12 || gap > max_gap + 1e-12) continue;
    for (std::size_t j = 0; j < grid.tau_days.size(); ++j) {
      if (grid.tau_days[j] > max_tau_days + 1e-12 || grid.missing(i, j)) continue;
      sum += grid.values[i][j];
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : kNaN;
}

bool CalibrationReport::defined() const { return std::isfinite(spearman); }

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("spearman: length mismatch");
  if (a.size() < 2) return kNaN;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) return kNaN;
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const Moments ma = moments(ra);
  const Moments mb = moments(rb);
  if (!(ma.variance > 0.0) || !(mb.variance > 0.0)) return kNaN;
  double s = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) s += (ra[i] - ma.mean) * (rb[i] - mb.mean);
  s /= static_cast<double>(ra.size() - 1);
  return s / std::sqrt(ma.variance * mb.variance);
}

CalibrationReport calibration_bins(std::span<const double> sigma2, std::span<const double> rewards,
                                   int k) {
  if (k < 2) throw ArgumentError("calibration needs k >= 2");
  if (sigma2.size() != rewards.size()) throw ShapeError("calibration: length mismatch");
  const auto bins = static_cast<std::size_t>(k);
  if (sigma2.size() < bins) {
    throw ArgumentError("calibration: " + std::to_string(sigma2.size()) + " samples for " +
                        std::to_string(bins) + " bins");
  }
  std::vector<std::size_t> idx(sigma2.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return sigma2[a] < sigma2[b]; });

  CalibrationReport rep;
  rep.n = sigma2.size();
  const std::size_t base = rep.n / bins;
  const std::size_t extra = rep.n % bins;
  std::size_t start = 0;
  std::vector<double> bin_sigma, bin_var;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    CalibrationBin bin;
    bin.n = len;
    bin.lo = sigma2[idx[start]];
    bin.hi = sigma2[idx[start + len - 1]];
    std::vector<double> s(len), r(len);
    for (std::size_t i = 0; i < len; ++i) {
      s[i] = sigma2[idx[start + i]];
      r[i] = rewards[idx[start + i]];
    }
    bin.mean_sigma2 = moments(s).mean;
    bin.realized_var = len >= 2 ? moments(r).variance : kNaN;
    rep.bins.push_back(bin);
    bin_sigma.push_back(bin.mean_sigma2);
    bin_var.push_back(bin.realized_var);
    start += len;
  }
  for (std::size_t b = 0; b + 1 < bins; ++b) {
    rep.bins[b].tied_boundary = rep.bins[b].hi == rep.bins[b + 1].lo;
  }
  rep.spearman = spearman(bin_sigma, bin_var);
  return rep;
}

CalibrationSamples collect_calibration_samples(const agent::Actor& actor,
                                               const std::vector<HedgeEpisode>& episodes,
                                               const CostModel& cost, bool normalize) {
  CalibrationSamples out;
  const Policy policy = agent::make_policy(actor);
  for (const auto& ep : episodes) {
    const RolloutResult r = rollout(ep, policy, cost);
    for (const auto& t : r.transitions) {
      out.sigma2.push_back(actor.sigma2(encode_state(t.state)));
      out.rewards.push_back(normalize ? t.reward / ep.premium : t.reward);
    }
  }
  return out;
}

}  // namespace hedgekit::eval
