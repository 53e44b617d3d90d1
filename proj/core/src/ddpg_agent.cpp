#include "hedgekit/ddpg_agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <unordered_set>

#include "hedgekit/csv.hpp"
#include "hedgekit/errors.hpp"

namespace hedgekit::agent {

namespace {

Matrix to_column(const StateVector& s) {
  Matrix m(static_cast<Eigen::Index>(kStateDim), 1);
  for (std::size_t i = 0; i < kStateDim; ++i) m(static_cast<Eigen::Index>(i), 0) = s[i];
  return m;
}

std::vector<int> dims_with(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

std::vector<nn::Activation> hidden_acts(std::size_t hidden, nn::Activation out) {
  std::vector<nn::Activation> acts(hidden, nn::Activation::relu);
  acts.push_back(out);
  return acts;
}

void read_json_file(const std::filesystem::path& path, nlohmann::json& out) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    in >> out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (!(discount >= 0.0 && discount <= 1.0)) problems.emplace_back("discount must be in [0, 1]");
  if (!(soft_update_rate > 0.0 && soft_update_rate <= 1.0)) {
    problems.emplace_back("soft_update_rate must be in (0, 1]");
  }
  if (batch_size == 0) problems.emplace_back("batch_size must be >= 1");
  if (buffer_capacity < batch_size) problems.emplace_back("buffer_capacity must be >= batch_size");
  if (!(noise_start >= 0.0) || !(noise_end >= 0.0)) problems.emplace_back("noise std must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) problems.emplace_back("dropout must be in [0, 1)");
  if (mc_passes < 2) problems.emplace_back("mc_passes must be >= 2");
  if (!(epistemic_penalty >= 0.0)) problems.emplace_back("epistemic_penalty must be >= 0");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0) || !(log_var_lr > 0.0)) {
    problems.emplace_back("learning rates must be > 0");
  }
  if (!(risk_aversion >= 0.0)) problems.emplace_back("risk_aversion must be >= 0");
  if (updates_per_step == 0) problems.emplace_back("updates_per_step must be >= 1");
  if (actor_hidden.empty() || critic_hidden.empty() || log_var_hidden.empty()) {
    problems.emplace_back("hidden layer lists must be non-empty");
  }
  if (!problems.empty()) {
    std::string msg = "invalid train config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"discount", c.discount},
      {"soft_update_rate", c.soft_update_rate},
      {"batch_size", c.batch_size},
      {"buffer_capacity", c.buffer_capacity},
      {"noise_start", c.noise_start},
      {"noise_end", c.noise_end},
      {"dropout", c.dropout},
      {"mc_passes", c.mc_passes},
      {"episodes", c.episodes},
      {"warmup", c.warmup},
      {"updates_per_step", c.updates_per_step},
      {"epistemic_penalty", c.epistemic_penalty},
      {"actor_lr", c.actor_lr},
      {"critic_lr", c.critic_lr},
      {"log_var_lr", c.log_var_lr},
      {"learn_log_var", c.learn_log_var},
      {"risk_aversion", c.risk_aversion},
      {"normalize_rewards", c.normalize_rewards},
      {"actor_hidden", c.actor_hidden},
      {"critic_hidden", c.critic_hidden},
      {"log_var_hidden", c.log_var_hidden},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  TrainConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("discount", c.discount);
    get("soft_update_rate", c.soft_update_rate);
    get("batch_size", c.batch_size);
    get("buffer_capacity", c.buffer_capacity);
    get("noise_start", c.noise_start);
    get("noise_end", c.noise_end);
    get("dropout", c.dropout);
    get("mc_passes", c.mc_passes);
    get("episodes", c.episodes);
    get("warmup", c.warmup);
    get("updates_per_step", c.updates_per_step);
    get("epistemic_penalty", c.epistemic_penalty);
    get("actor_lr", c.actor_lr);
    get("critic_lr", c.critic_lr);
    get("log_var_lr", c.log_var_lr);
    get("learn_log_var", c.learn_log_var);
    get("risk_aversion", c.risk_aversion);
    get("normalize_rewards", c.normalize_rewards);
    get("actor_hidden", c.actor_hidden);
    get("critic_hidden", c.critic_hidden);
    get("log_var_hidden", c.log_var_hidden);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

// --- Actor / Critic ---------------------------------------------------------

Actor Actor::create(const TrainConfig& config, Rng& rng) {
  const int in = static_cast<int>(kStateDim);
  Actor a;
  a.policy = nn::DenseNet(dims_with(in, config.actor_hidden, 1),
                          hidden_acts(config.actor_hidden.size(), nn::Activation::sigmoid));
  a.policy.init_uniform(rng);
  a.log_var = nn::DenseNet(dims_with(in, config.log_var_hidden, 1),
                           hidden_acts(config.log_var_hidden.size(), nn::Activation::identity));
  a.log_var.init_uniform(rng);
  a.log_var_frozen = !config.learn_log_var;
  return a;
}

double Actor::act(const StateVector& s) const { return policy.forward(to_column(s))(0, 0); }

double Actor::log_variance(const StateVector& s) const {
  if (log_var_frozen) return 0.0;
  return nn::clip_log_var(log_var.forward(to_column(s))(0, 0));
}

double Actor::sigma2(const StateVector& s) const { return std::exp(log_variance(s)); }

Critic Critic::create(const TrainConfig& config, Rng& rng) {
  Critic c;
  std::vector<double> dropout(config.critic_hidden.size(), config.dropout);
  c.net = nn::DenseNet(dims_with(static_cast<int>(kStateDim) + 1, config.critic_hidden, 1),
                       hidden_acts(config.critic_hidden.size(), nn::Activation::identity), dropout);
  c.net.init_uniform(rng);
  return c;
}

double Critic::q(const StateVector& s, double action) const {
  Vector a(1);
  a(0) = action;
  return net.forward(critic_input(to_column(s), a))(0, 0);
}

nlohmann::json to_json(const Actor& actor) {
  return {{"format_version", nn::kCheckpointFormatVersion},
          {"policy", nn::to_json(actor.policy)},
          {"log_var", nn::to_json(actor.log_var)},
          {"log_var_frozen", actor.log_var_frozen}};
}

Actor actor_from_json(const nlohmann::json& doc) {
  try {
    Actor a;
    a.policy = nn::dense_net_from_json(doc.at("policy"));
    a.log_var = nn::dense_net_from_json(doc.at("log_var"));
    a.log_var_frozen = doc.at("log_var_frozen").get<bool>();
    if (a.policy.input_dim() != static_cast<int>(kStateDim) ||
        a.log_var.input_dim() != static_cast<int>(kStateDim)) {
      throw FormatError("actor checkpoint has wrong state dimension");
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed actor checkpoint: ") + e.what());
  }
}

// --- Replay -----------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ArgumentError("replay capacity must be >= 1");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(const StoredTransition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[next_] = t;
  }
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (batch > size_) throw ArgumentError("cannot sample more transitions than stored");
  std::vector<std::size_t> out;
  out.reserve(batch);
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(batch * 2);
  for (std::size_t j = size_ - batch; j < size_; ++j) {
    const std::size_t k = rng.index(j + 1);
    if (chosen.insert(k).second) {
      out.push_back(k);
    } else {
      chosen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices) {
  std::vector<StoredTransition> ts;
  ts.reserve(indices.size());
  for (auto i : indices) ts.push_back(buffer.at(i));
  return make_batch(ts);
}

Batch make_batch(const std::vector<StoredTransition>& ts) {
  if (ts.empty()) throw ArgumentError("empty batch");
  const auto n = static_cast<Eigen::Index>(ts.size());
  const auto d = static_cast<Eigen::Index>(kStateDim);
  Batch b;
  b.states.resize(d, n);
  b.next_states.resize(d, n);
  b.actions.resize(n);
  b.rewards.resize(n);
  b.dones.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = ts[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < d; ++i) {
      b.states(i, j) = t.state[static_cast<std::size_t>(i)];
      b.next_states(i, j) = t.next_state[static_cast<std::size_t>(i)];
    }
    b.actions(j) = t.action;
    b.rewards(j) = t.reward;
    b.dones(j) = t.done ? 1.0 : 0.0;
  }
  return b;
}

Matrix critic_input(const Matrix& states, const Vector& actions) {
  if (actions.size() != states.cols()) throw ShapeError("critic_input: batch size mismatch");
  Matrix x(states.rows() + 1, states.cols());
  x.topRows(states.rows()) = states;
  x.row(states.rows()) = actions.transpose();
  return x;
}

// --- Updates ----------------------------------------------------------------

ActionSample select_action(const Actor& actor, const HedgeState& state, bool explore,
                           double noise_std, Rng& rng) {
  const StateVector s = encode_state(state);
  ActionSample out;
  out.action = actor.act(s);
  out.sigma2 = actor.sigma2(s);
  if (explore && noise_std > 0.0) {
    out.action = std::clamp(out.action + noise_std * rng.normal(), 0.0, 1.0);
  }
  return out;
}

Vector critic_target(const Batch& batch, const Actor& target_actor, const Critic& target_critic,
                     double discount) {
  if (batch.size() == 0) throw ArgumentError("critic_target: empty batch");
  const Vector next_actions = target_actor.policy.forward(batch.next_states).row(0).transpose();
  const Vector next_q =
      target_critic.net.forward(critic_input(batch.next_states, next_actions)).row(0).transpose();
  return batch.rewards.array() + discount * (1.0 - batch.dones.array()) * next_q.array();
}

WeightedTdTerms weighted_td_terms(const Vector& targets, const Vector& q, const Vector& log_var) {
  const auto n = q.size();
  WeightedTdTerms t;
  t.loss.resize(n);
  t.d_q.resize(n);
  t.d_log_var.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Residual y - Q; L depends on Q through -residual.
    const nn::NllTerm term = nn::gaussian_nll(targets(i) - q(i), log_var(i));
    t.loss(i) = term.loss;
    t.d_q(i) = -term.d_residual;
    t.d_log_var(i) = term.d_log_var;
  }
  return t;
}

CriticStats critic_update(Critic& critic, nn::AdamState& critic_opt, Actor& actor,
                          nn::AdamState& log_var_opt, const Batch& batch, const Vector& targets,
                          const nn::DropoutMask* critic_mask) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ArgumentError("critic_update: empty batch");
  if (targets.size() != n) throw ShapeError("critic_update: targets size mismatch");
  const double inv_n = 1.0 / static_cast<double>(n);

  nn::ForwardCache cache;
  const Vector q =
      critic.net.forward(critic_input(batch.states, batch.actions), cache, critic_mask).row(0).transpose();

  Vector raw_log_var;
  nn::ForwardCache lv_cache;
  Vector log_var;
  if (actor.log_var_frozen) {
    log_var = Vector::Zero(n);
  } else {
    raw_log_var = actor.log_var.forward(batch.states, lv_cache).row(0).transpose();
    log_var = raw_log_var.unaryExpr([](double v) { return nn::clip_log_var(v); });
  }

  const WeightedTdTerms terms = weighted_td_terms(targets, q, log_var);

  CriticStats stats;
  stats.loss = terms.loss.mean();
  stats.mean_sq_td = (targets - q).squaredNorm() * inv_n;
  stats.mean_sigma2 = log_var.array().exp().mean();

  const Matrix upstream = (terms.d_q * inv_n).transpose();
  nn::adam_step(critic.net, critic.net.backward(cache, upstream), critic_opt);

  if (!actor.log_var_frozen) {
    Matrix lv_upstream(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double g = terms.d_log_var(i) * inv_n;
      // Clipped outputs only receive gradient that pushes them back in range.
      if ((raw_log_var(i) > nn::kMaxLogVar && g < 0.0) ||
          (raw_log_var(i) < nn::kMinLogVar && g > 0.0)) {
        g = 0.0;
      }
      lv_upstream(0, i) = g;
    }
    nn::adam_step(actor.log_var, actor.log_var.backward(lv_cache, lv_upstream), log_var_opt);
  }
  return stats;
}

void actor_update(Actor& actor, nn::AdamState& actor_opt, const Critic& critic, const Batch& batch,
                  double epistemic_penalty, int mc_passes, Rng& rng) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ArgumentError("actor_update: empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);

  nn::ForwardCache policy_cache;
  const Vector actions = actor.policy.forward(batch.states, policy_cache).row(0).transpose();

  // d(-mean Q)/da through the deterministic critic.
  nn::ForwardCache q_cache;
  const Matrix x = critic_input(batch.states, actions);
  critic.net.forward(x, q_cache, nullptr);
  const Matrix q_upstream = Matrix::Constant(1, n, -inv_n);
  const nn::Gradients q_grads = critic.net.backward(q_cache, q_upstream);
  Matrix d_action = q_grads.input.bottomRows(1);

  if (epistemic_penalty > 0.0 && critic.net.has_dropout()) {
    if (mc_passes < 2) throw ArgumentError("actor_update: mc_passes must be >= 2");
    const Eigen::Index t = mc_passes;
    Matrix xr(x.rows(), n * t);
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index k = 0; k < t; ++k) xr.col(b * t + k) = x.col(b);
    }
    const nn::DropoutMask mask = critic.net.sample_mask(rng, n * t);
    nn::ForwardCache mc_cache;
    const Matrix qs = critic.net.forward(xr, mc_cache, &mask);
    Matrix up(1, n * t);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto block = qs.block(0, b * t, 1, t);
      const double mean = block.mean();
      const double var = (block.array() - mean).square().sum() / static_cast<double>(t - 1);
      const double sd = std::sqrt(var);
      for (Eigen::Index k = 0; k < t; ++k) {
        // d sqrt(V)/dQ_k = (Q_k - mean) / ((T - 1) sqrt(V))
        up(0, b * t + k) = sd > 0.0 ? epistemic_penalty * inv_n * (qs(0, b * t + k) - mean) /
                                          (static_cast<double>(t - 1) * sd)
                                    : 0.0;
      }
    }
    const nn::Gradients var_grads = critic.net.backward(mc_cache, up);
    for (Eigen::Index b = 0; b < n; ++b) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < t; ++k) s += var_grads.input(x.rows() - 1, b * t + k);
      d_action(0, b) += s;
    }
  }

  nn::adam_step(actor.policy, actor.policy.backward(policy_cache, d_action), actor_opt);
}

void soft_update(nn::DenseNet& target, const nn::DenseNet& source, double rate) {
  nn::blend_into(target, source, rate);
}

void soft_update(Actor& target, const Actor& source, double rate) {
  nn::blend_into(target.policy, source.policy, rate);
  nn::blend_into(target.log_var, source.log_var, rate);
}

void soft_update(Critic& target, const Critic& source, double rate) {
  nn::blend_into(target.net, source.net, rate);
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw ArgumentError("sample variance needs at least 2 values");
  const double shift = values.front();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    const double d = v - shift;
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(values.size());
  return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
}

Vector epistemic_q_variance(const Critic& critic, const Matrix& states, const Vector& actions,
                            int passes, std::uint64_t seed) {
  if (passes < 2) throw ArgumentError("epistemic_q_variance needs at least 2 passes");
  const Eigen::Index n = states.cols();
  if (!critic.net.has_dropout()) return Vector::Zero(n);
  const Eigen::Index t = passes;
  const Matrix x = critic_input(states, actions);
  Matrix xr(x.rows(), n * t);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index k = 0; k < t; ++k) xr.col(b * t + k) = x.col(b);
  }
  Rng rng(seed);
  const nn::DropoutMask mask = critic.net.sample_mask(rng, n * t);
  const Matrix qs = critic.net.forward(xr, &mask);
  Vector out(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    out(b) = sample_variance(std::span<const double>(qs.data() + b * t, static_cast<std::size_t>(t)));
  }
  return out;
}

double epistemic_q_variance(const Critic& critic, const StateVector& state, double action,
                            int passes, std::uint64_t seed) {
  Vector a(1);
  a(0) = action;
  return epistemic_q_variance(critic, to_column(state), a, passes, seed)(0);
}

// --- Learner ----------------------------------------------------------------

DdpgLearner::DdpgLearner(const TrainConfig& config, std::uint64_t seed)
    : config_(config),
      buffer_(config.buffer_capacity),
      explore_rng_(derive_seed(seed, 1)),
      replay_rng_(derive_seed(seed, 2)),
      dropout_rng_(derive_seed(seed, 3)) {
  config_.validate();
  Rng init_rng(derive_seed(seed, 0));
  actor_ = Actor::create(config_, init_rng);
  critic_ = Critic::create(config_, init_rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = nn::AdamState::for_net(actor_.policy, {config_.actor_lr});
  critic_opt_ = nn::AdamState::for_net(critic_.net, {config_.critic_lr});
  log_var_opt_ = nn::AdamState::for_net(actor_.log_var, {config_.log_var_lr});
}

UpdateStats DdpgLearner::update() {
  const Batch batch = make_batch(buffer_, buffer_.sample_indices(config_.batch_size, replay_rng_));
  const Vector targets = critic_target(batch, target_actor_, target_critic_, config_.discount);

  UpdateStats stats;
  if (critic_.net.has_dropout()) {
    const nn::DropoutMask mask = critic_.net.sample_mask(dropout_rng_, batch.size());
    stats.critic = critic_update(critic_, critic_opt_, actor_, log_var_opt_, batch, targets, &mask);
  } else {
    stats.critic = critic_update(critic_, critic_opt_, actor_, log_var_opt_, batch, targets, nullptr);
  }
  actor_update(actor_, actor_opt_, critic_, batch, config_.epistemic_penalty, config_.mc_passes,
               dropout_rng_);
  soft_update(target_actor_, actor_, config_.soft_update_rate);
  soft_update(target_critic_, critic_, config_.soft_update_rate);
  return stats;
}

double training_reward(double reward, double premium, const TrainConfig& config) {
  const double r = config.normalize_rewards ? reward / premium : reward;
  return risk_adjusted_reward(r, config.risk_aversion);
}

TrainResult train(const EpisodeFactory& episodes, const TrainConfig& config, const CostModel& cost,
                  std::uint64_t seed) {
  config.validate();
  cost.validate();
  DdpgLearner learner(config, seed);
  TrainResult result;
  result.config = config;
  result.log.reserve(config.episodes);

  const std::size_t min_fill = std::max(config.warmup, config.batch_size);
  for (std::size_t e = 0; e < config.episodes; ++e) {
    const HedgeEpisode episode = episodes(e);
    const double frac =
        config.episodes > 1 ? static_cast<double>(e) / static_cast<double>(config.episodes - 1) : 0.0;
    const double noise = config.noise_start + (config.noise_end - config.noise_start) * frac;

    TrainLogRow row;
    row.episode = e;
    std::size_t n_updates = 0;
    double loss_sum = 0.0;
    double sigma2_sum = 0.0;

    AccountState account = open_account(episode);
    HedgeState state = build_state(episode, 0, account.position);
    StateVector encoded = encode_state(state);
    for (std::size_t t = 0; t < episode.steps(); ++t) {
      const ActionSample a = select_action(learner.actor(), state, true, noise, learner.exploration_rng());
      const StepResult r = step(episode, account, t, a.action, cost);
      const HedgeState next = build_state(episode, t + 1, r.applied_position);
      StoredTransition st;
      st.state = encoded;
      st.action = r.applied_position;
      st.reward = training_reward(r.reward, episode.premium, config);
      st.next_state = encode_state(next);
      st.done = r.done;
      learner.buffer().push(st);
      row.total_reward += st.reward;

      if (learner.buffer().size() >= min_fill) {
        for (std::size_t u = 0; u < config.updates_per_step; ++u) {
          const UpdateStats s = learner.update();
          loss_sum += s.critic.loss;
          sigma2_sum += s.critic.mean_sigma2;
          ++n_updates;
        }
      }
      account = r.account;
      state = next;
      encoded = st.next_state;
    }
    if (n_updates > 0) {
      row.critic_loss = loss_sum / static_cast<double>(n_updates);
      row.mean_sigma2 = sigma2_sum / static_cast<double>(n_updates);
    } else {
      row.critic_loss = std::numeric_limits<double>::quiet_NaN();
      row.mean_sigma2 = std::numeric_limits<double>::quiet_NaN();
    }
    result.log.push_back(row);
  }
  result.actor = learner.actor();
  result.critic = learner.critic();
  result.target_actor = learner.target_actor();
  result.target_critic = learner.target_critic();
  return result;
}

void save_bundle(const TrainResult& result, const std::filesystem::path& dir,
                 const nlohmann::json& provenance) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_json_file(dir / "actor.json", to_json(result.actor));
  write_json_file(dir / "critic.json", nn::to_json(result.critic.net));
  write_json_file(dir / "target_actor.json", to_json(result.target_actor));
  write_json_file(dir / "target_critic.json", nn::to_json(result.target_critic.net));
  nlohmann::json cfg = to_json(result.config);
  if (!provenance.is_null()) cfg["provenance"] = provenance;
  write_json_file(dir / "train_config.json", cfg);

  csv::Writer log(dir / "train_log.csv");
  log.header({"episode", "total_reward", "critic_loss", "mean_sigma2"});
  for (const auto& row : result.log) {
    log.field(row.episode).field(row.total_reward).field(row.critic_loss).field(row.mean_sigma2);
    log.end_row();
  }
  log.close();
}

TrainResult load_bundle(const std::filesystem::path& dir) {
  TrainResult r;
  nlohmann::json doc;
  read_json_file(dir / "actor.json", doc);
  r.actor = actor_from_json(doc);
  read_json_file(dir / "critic.json", doc);
  r.critic.net = nn::dense_net_from_json(doc);
  read_json_file(dir / "target_actor.json", doc);
  r.target_actor = actor_from_json(doc);
  read_json_file(dir / "target_critic.json", doc);
  r.target_critic.net = nn::dense_net_from_json(doc);
  read_json_file(dir / "train_config.json", doc);
  r.config = train_config_from_json(doc);
  return r;
}

Policy make_policy(const Actor& actor) {
  return [actor](const HedgeState& s) { return actor.act(encode_state(s)); };
}

}  // namespace hedgekit::agent
