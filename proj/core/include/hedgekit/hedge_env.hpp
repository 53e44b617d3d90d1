#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "hedgekit/market_sim.hpp"
#include "hedgekit/option_analytics.hpp"

namespace hedgekit {

/// Linear proportional fee: rate * spot * |shares traded|.
struct CostModel {
  double rate = 0.01;

  void validate() const;
};

double transaction_cost(double spot, double delta_n, const CostModel& cost);

struct VolFeatures {
  double implied = 0.0;
  double hist_20 = 0.0;
  double hist_30 = 0.0;
};

/// Observation handed to a hedging policy.
struct HedgeState {
  double tau = 0.0;        // years remaining
  double moneyness = 1.0;  // S / K
  double position = 0.0;   // shares held, in [0, 1]
  double spot = 0.0;
  double strike = 0.0;
  VolFeatures vols;
  Greeks greeks;           // all zero at expiry
  double days_per_year = kDefaultDaysPerYear;
};

/// Number of entries produced by `encode_state`.
inline constexpr std::size_t kStateDim = 10;
using StateVector = std::array<double, kStateDim>;

/// Fixed affine scaling of a HedgeState into O(1) network inputs.
StateVector encode_state(const HedgeState& state);

struct AccountState {
  double cash = 0.0;
  double position = 0.0;
  double portfolio = 0.0;  // cash + S N - C; equals cash once settled
  bool settled = false;
};

struct Transition {
  HedgeState state;
  double action = 0.0;
  double reward = 0.0;
  HedgeState next_state;
  bool done = false;
};

struct StepResult {
  double reward = 0.0;
  AccountState account;
  bool done = false;
  bool clipped = false;  // requested position was outside [0, 1]
  double applied_position = 0.0;  // N_{t+1} after clipping
};

/// Short one call for the premium; no stock held.
AccountState open_account(const HedgeEpisode& episode);

/// Rebalance to `new_position` at node t and carry the book to node t + 1.
///   R_t = C_t - C_{t+1} + N_{t+1}(S_{t+1} - S_t) - f(S_t, N_{t+1} - N_t)
/// On the last step the option is settled at its final mark and the stock is
/// sold at S_T, paying f(S_T, N_T) on top.
StepResult step(const HedgeEpisode& episode, const AccountState& account, std::size_t t,
                double new_position, const CostModel& cost);

/// r - (lambda / 2) r^2, a single-sample mean-variance proxy.
double risk_adjusted_reward(double reward, double lambda);

HedgeState build_state(const HedgeEpisode& episode, std::size_t t, double position);

using Policy = std::function<double(const HedgeState&)>;

struct RolloutResult {
  std::vector<Transition> transitions;
  double total_pnl = 0.0;
};

RolloutResult rollout(const HedgeEpisode& episode, const Policy& policy, const CostModel& cost);

/// Total P&L only; avoids materialising transitions.
double rollout_pnl(const HedgeEpisode& episode, const Policy& policy, const CostModel& cost);

}  // namespace hedgekit
