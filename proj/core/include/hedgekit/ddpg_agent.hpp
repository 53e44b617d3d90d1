#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <nlohmann/json.hpp>
#include <vector>

#include "hedgekit/hedge_env.hpp"
#include "hedgekit/neural_core.hpp"
#include "hedgekit/rng.hpp"

namespace hedgekit::agent {

using nn::Matrix;
using nn::Vector;

struct TrainConfig {
  double discount = 0.99;
  double soft_update_rate = 0.005;
  std::size_t batch_size = 128;
  std::size_t buffer_capacity = 200000;
  double noise_start = 0.15;  // exploration std, decays linearly to noise_end
  double noise_end = 0.02;
  double dropout = 0.1;       // critic hidden layers
  int mc_passes = 30;
  std::size_t episodes = 8000;
  std::size_t warmup = 1000;  // transitions collected before the first update
  std::size_t updates_per_step = 1;
  double epistemic_penalty = 0.0;  // beta in Q - beta sqrt(Var Q)
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double log_var_lr = 1e-3;
  /// false: sigma^2 frozen at 1, i.e. plain DDPG TD loss.
  bool learn_log_var = true;
  double risk_aversion = 0.0;  // lambda of the risk-adjusted reward
  bool normalize_rewards = true;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  std::vector<int> log_var_hidden{32, 32};

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

/// Deterministic policy with a sigmoid action head and a separate log-variance
/// head on the same state input. The log-variance head is trained only by the
/// critic-side Gaussian NLL.
struct Actor {
  nn::DenseNet policy;
  nn::DenseNet log_var;
  bool log_var_frozen = false;  // sigma^2 == 1 regardless of log_var weights

  static Actor create(const TrainConfig& config, Rng& rng);

  double act(const StateVector& s) const;
  /// Clipped log-variance; 0 when frozen.
  double log_variance(const StateVector& s) const;
  double sigma2(const StateVector& s) const;

  bool operator==(const Actor&) const = default;
};

/// Q(s, a) over the concatenated [state; action] input, dropout on hidden layers.
struct Critic {
  nn::DenseNet net;

  static Critic create(const TrainConfig& config, Rng& rng);

  double q(const StateVector& s, double action) const;

  bool operator==(const Critic&) const = default;
};

nlohmann::json to_json(const Actor& actor);
Actor actor_from_json(const nlohmann::json& doc);

struct StoredTransition {
  StateVector state{};
  double action = 0.0;
  double reward = 0.0;
  StateVector next_state{};
  bool done = false;
};

class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const StoredTransition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  const StoredTransition& at(std::size_t i) const { return data_.at(i); }

  /// `batch` distinct indices, uniform (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  std::vector<StoredTransition> data_;
};

/// Column-major training batch.
struct Batch {
  Matrix states;       // kStateDim x B
  Vector actions;      // B
  Vector rewards;      // B
  Matrix next_states;  // kStateDim x B
  Vector dones;        // B, 1.0 for terminal

  Eigen::Index size() const { return actions.size(); }
};

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices);
Batch make_batch(const std::vector<StoredTransition>& transitions);

/// Critic input [states; actions].
Matrix critic_input(const Matrix& states, const Vector& actions);

struct ActionSample {
  double action = 0.0;
  double sigma2 = 1.0;
};

/// explore = false is deterministic; otherwise N(0, noise_std) is added and
/// the result clipped to [0, 1].
ActionSample select_action(const Actor& actor, const HedgeState& state, bool explore,
                           double noise_std, Rng& rng);

/// y = r + discount * (1 - done) * Q'(s', pi'(s')), targets without dropout.
Vector critic_target(const Batch& batch, const Actor& target_actor, const Critic& target_critic,
                     double discount);

struct CriticStats {
  double loss = 0.0;        // mean of 0.5 sigma^-2 e^2 + 0.5 log sigma^2
  double mean_sq_td = 0.0;  // mean e^2
  double mean_sigma2 = 1.0;
};

/// Per-sample pieces of the precision-weighted TD loss for given Q outputs.
struct WeightedTdTerms {
  Vector loss;
  Vector d_q;        // dL/dQ per sample (not divided by batch size)
  Vector d_log_var;  // dL/dlog_var per sample, residual held constant
};
WeightedTdTerms weighted_td_terms(const Vector& targets, const Vector& q, const Vector& log_var);

/// One gradient step on the critic (and the log-variance head unless frozen).
/// `critic_mask` is the dropout mask used for this step (nullptr: none).
CriticStats critic_update(Critic& critic, nn::AdamState& critic_opt, Actor& actor,
                          nn::AdamState& log_var_opt, const Batch& batch, const Vector& targets,
                          const nn::DropoutMask* critic_mask);

/// One ascent step on mean Q(s, pi(s)) - beta sqrt(Var Q). The variance term
/// uses `mc_passes` dropout passes when beta > 0.
void actor_update(Actor& actor, nn::AdamState& actor_opt, const Critic& critic, const Batch& batch,
                  double epistemic_penalty, int mc_passes, Rng& rng);

void soft_update(nn::DenseNet& target, const nn::DenseNet& source, double rate);
void soft_update(Actor& target, const Actor& source, double rate);
void soft_update(Critic& target, const Critic& source, double rate);

/// Unbiased sample variance with a shifted two-pass sum: exactly 0 when all
/// values coincide. Throws ArgumentError for fewer than 2 values.
double sample_variance(std::span<const double> values);

/// Var of Q over `passes` forward passes with independent dropout masks.
/// Exactly 0 for a critic without dropout.
double epistemic_q_variance(const Critic& critic, const StateVector& state, double action,
                            int passes, std::uint64_t seed);

/// Batched version over states/actions; row b is the variance for column b.
Vector epistemic_q_variance(const Critic& critic, const Matrix& states, const Vector& actions,
                            int passes, std::uint64_t seed);

struct TrainLogRow {
  std::size_t episode = 0;
  double total_reward = 0.0;
  double critic_loss = 0.0;
  double mean_sigma2 = 1.0;
};

struct UpdateStats {
  CriticStats critic;
};

/// Networks, optimisers, replay and RNG streams for one training run.
class DdpgLearner {
public:
  DdpgLearner(const TrainConfig& config, std::uint64_t seed);

  const TrainConfig& config() const { return config_; }
  Actor& actor() { return actor_; }
  const Actor& actor() const { return actor_; }
  const Critic& critic() const { return critic_; }
  const Actor& target_actor() const { return target_actor_; }
  const Critic& target_critic() const { return target_critic_; }
  ReplayBuffer& buffer() { return buffer_; }
  Rng& exploration_rng() { return explore_rng_; }

  /// Sample a batch and take one critic, actor and target step.
  UpdateStats update();

private:
  TrainConfig config_;
  Actor actor_;
  Critic critic_;
  Actor target_actor_;
  Critic target_critic_;
  nn::AdamState actor_opt_;
  nn::AdamState critic_opt_;
  nn::AdamState log_var_opt_;
  ReplayBuffer buffer_;
  Rng explore_rng_;
  Rng replay_rng_;
  Rng dropout_rng_;
};

using EpisodeFactory = std::function<HedgeEpisode(std::size_t episode_index)>;

struct TrainResult {
  Actor actor;
  Critic critic;
  Actor target_actor;
  Critic target_critic;
  TrainConfig config;
  std::vector<TrainLogRow> log;
};

/// Training reward fed to the learner: optional premium normalisation, then
/// the risk adjustment.
double training_reward(double reward, double premium, const TrainConfig& config);

TrainResult train(const EpisodeFactory& episodes, const TrainConfig& config, const CostModel& cost,
                  std::uint64_t seed);

/// Bundle layout: actor.json, critic.json, target_actor.json,
/// target_critic.json, train_config.json, train_log.csv.
void save_bundle(const TrainResult& result, const std::filesystem::path& dir,
                 const nlohmann::json& provenance = {});
TrainResult load_bundle(const std::filesystem::path& dir);

/// Greedy policy of a trained actor.
Policy make_policy(const Actor& actor);

}  // namespace hedgekit::agent
