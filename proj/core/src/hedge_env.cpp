#include "hedgekit/hedge_env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hedgekit/errors.hpp"

namespace hedgekit {

void CostModel::validate() const {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw DomainError("cost rate must be >= 0, got " + std::to_string(rate));
  }
}

double transaction_cost(double spot, double delta_n, const CostModel& cost) {
  if (!(spot > 0.0)) throw DomainError("transaction_cost: spot must be > 0");
  return cost.rate * spot * std::abs(delta_n);
}

StateVector encode_state(const HedgeState& s) {
  const double hist_20 = std::isfinite(s.vols.hist_20) ? s.vols.hist_20 : s.vols.implied;
  const double hist_30 = std::isfinite(s.vols.hist_30) ? s.vols.hist_30 : s.vols.implied;
  return {
      s.tau * s.days_per_year / 30.0,
      (s.moneyness - 1.0) * 10.0,
      s.position,
      s.vols.implied * 5.0,
      hist_20 * 5.0,
      hist_30 * 5.0,
      s.greeks.delta,
      s.greeks.gamma * s.spot * 0.1,
      s.greeks.theta / s.days_per_year / s.spot * 1000.0,
      s.greeks.vega / s.spot * 10.0,
  };
}

AccountState open_account(const HedgeEpisode& episode) {
  AccountState acc;
  acc.cash = episode.premium;
  acc.position = 0.0;
  acc.portfolio = acc.cash - episode.option_prices.front();
  return acc;
}

StepResult step(const HedgeEpisode& episode, const AccountState& account, std::size_t t,
                double new_position, const CostModel& cost) {
  if (episode.nodes() < 2 || t + 1 >= episode.nodes()) {
    throw IndexError("step: t_index " + std::to_string(t) + " out of range for " +
                     std::to_string(episode.steps()) + " steps");
  }
  if (account.settled) throw ArgumentError("step: account already settled");

  StepResult out;
  if (!(new_position >= 0.0 && new_position <= 1.0)) {
    out.clipped = true;
    new_position = std::isnan(new_position) ? account.position : std::clamp(new_position, 0.0, 1.0);
  }

  out.applied_position = new_position;
  const double s_t = episode.path.prices[t];
  const double s_next = episode.path.prices[t + 1];
  const double c_t = episode.option_prices[t];
  const double c_next = episode.option_prices[t + 1];
  const double traded = new_position - account.position;
  const double fee = transaction_cost(s_t, traded, cost);

  out.reward = c_t - c_next + new_position * (s_next - s_t) - fee;

  AccountState next;
  next.cash = account.cash - s_t * traded - fee;
  next.position = new_position;
  out.done = t + 2 == episode.nodes();
  if (out.done) {
    const double exit_fee = transaction_cost(s_next, new_position, cost);
    out.reward -= exit_fee;
    next.cash += s_next * new_position - exit_fee - c_next;
    next.position = 0.0;
    next.settled = true;
    next.portfolio = next.cash;
  } else {
    next.portfolio = next.cash + s_next * next.position - c_next;
  }
  out.account = next;
  return out;
}

double risk_adjusted_reward(double reward, double lambda) {
  return reward - 0.5 * lambda * reward * reward;
}

HedgeState build_state(const HedgeEpisode& episode, std::size_t t, double position) {
  if (t >= episode.nodes()) {
    throw IndexError("build_state: t_index " + std::to_string(t) + " out of range");
  }
  HedgeState s;
  s.tau = episode.taus[t];
  s.spot = episode.path.prices[t];
  s.strike = episode.spec.strike;
  s.moneyness = s.spot / s.strike;
  s.position = position;
  s.days_per_year = episode.days_per_year;
  s.vols.implied = episode.implied_vols[t];
  s.vols.hist_20 = episode.hist_vol_20.empty() ? s.vols.implied : episode.hist_vol_20[t];
  s.vols.hist_30 = episode.hist_vol_30.empty() ? s.vols.implied : episode.hist_vol_30[t];

  OptionSpec spec = episode.spec;
  spec.time_to_maturity = s.tau;
  if (s.tau > 0.0 && s.vols.implied > 0.0) {
    s.greeks = bs_greeks(s.spot, spec, s.vols.implied);
  } else {
    s.greeks.delta = bs_delta(s.spot, spec, std::max(s.vols.implied, 0.0));
  }
  return s;
}

RolloutResult rollout(const HedgeEpisode& episode, const Policy& policy, const CostModel& cost) {
  RolloutResult out;
  out.transitions.reserve(episode.steps());
  AccountState acc = open_account(episode);
  HedgeState state = build_state(episode, 0, acc.position);
  for (std::size_t t = 0; t < episode.steps(); ++t) {
    const double action = policy(state);
    const StepResult r = step(episode, acc, t, action, cost);
    Transition tr;
    tr.state = state;
    tr.action = r.applied_position;
    tr.reward = r.reward;
    tr.next_state = build_state(episode, t + 1, tr.action);
    tr.done = r.done;
    out.total_pnl += r.reward;
    state = tr.next_state;
    acc = r.account;
    out.transitions.push_back(std::move(tr));
  }
  return out;
}

double rollout_pnl(const HedgeEpisode& episode, const Policy& policy, const CostModel& cost) {
  double total = 0.0;
  AccountState acc = open_account(episode);
  for (std::size_t t = 0; t < episode.steps(); ++t) {
    const double action = policy(build_state(episode, t, acc.position));
    const StepResult r = step(episode, acc, t, action, cost);
    total += r.reward;
    acc = r.account;
  }
  return total;
}

}  // namespace hedgekit
