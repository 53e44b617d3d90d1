// Acceptance checks, one ctest entry per criterion.
//
//   hedgekit_acceptance <n> [--bundles DIR] [--work DIR]
//   hedgekit_acceptance train <ddpg|ddpg-uncertainty> DIR
//
// Every criterion prints detail lines followed by exactly one
// "criterion <n>: PASS|FAIL" line; the exit code is 0 only on PASS.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "hedgekit/data_pipeline.hpp"
#include "hedgekit/ddpg_agent.hpp"
#include "hedgekit/errors.hpp"
#include "hedgekit/evaluation.hpp"
#include "hedgekit/option_analytics.hpp"
#include "run_config.hpp"

using namespace hedgekit;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// --- Tolerances -------------------------------------------------------------

constexpr double kPriceTarget = 2.28;
constexpr double kPriceTol = 0.01;
constexpr double kIvRoundTripTol = 1e-6;

constexpr std::size_t kDistributionEpisodes = 20000;
constexpr double kNoHedgeMeanLo = -0.07, kNoHedgeMeanHi = -0.01;
constexpr double kNoHedgeVarLo = 1.16, kNoHedgeVarHi = 1.96;
constexpr double kDailyVarLo = 0.09, kDailyVarHi = 0.21;
constexpr double kThriceVarLo = 0.05, kThriceVarHi = 0.13;
constexpr double kZeroCostMeanTol = 0.05;
constexpr double kCostDailyMeanLo = -0.31, kCostDailyMeanHi = -0.15;
constexpr double kCostThriceMeanLo = -0.42, kCostThriceMeanHi = -0.26;

constexpr double kStdBand = 0.25;
constexpr double kDeskRuntimeSeconds = 30 * 60;

constexpr int kEquivalenceSteps = 500;

constexpr int kGradientSeeds = 20;
constexpr double kGradientRelTol = 1e-4;
constexpr double kGradientFloor = 1e-7;
constexpr double kFdStep = 1e-6;

constexpr int kMcPasses = 1000;
constexpr int kMcSeeds = 30;
constexpr double kMcRelStd = 0.20;

constexpr std::size_t kCalibrationSamples = 10000;
constexpr int kCalibrationBins = 7;
constexpr double kSpearmanMin = 0.5;

constexpr double kNearGap = 0.02, kFarGap = 0.10, kShortTauDays = 5.0;

constexpr double kRoundTripRewardTol = 1e-9;
constexpr double kSigmaRecoveryTol = 1e-4;

// --- Reporting --------------------------------------------------------------

struct Report {
  int id = 0;
  bool ok = true;

  void check(bool pass, const std::string& what) {
    std::printf("  [%s] %s\n", pass ? "ok" : "not met", what.c_str());
    ok = ok && pass;
  }
  void note(const std::string& what) { std::printf("  %s\n", what.c_str()); }
  int finish() const {
    std::printf("criterion %d: %s\n", id, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    return ok ? 0 : 1;
  }
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.variance = ss / (n - 1.0);
  return m;
}

bool in_band(double v, double lo, double hi) { return v >= lo && v <= hi; }

// Fixed seeds for every criterion, chosen before any run.
constexpr std::uint64_t kSeedNoHedge = 20240611;
constexpr std::uint64_t kSeedDelta = 20240612;
constexpr std::uint64_t kSeedEquivalence = 20240613;
constexpr std::uint64_t kSeedGradients = 20240614;
constexpr std::uint64_t kSeedMc = 20240615;
constexpr std::uint64_t kSeedCalibrationControl = 20240616;
constexpr std::uint64_t kSeedRoundTrip = 20240617;

std::vector<double> normalized_pnls(const Policy& policy, const GbmParams& market,
                                    const EpisodeConfig& ec, double fee, std::uint64_t seed,
                                    std::size_t n) {
  const auto eps = generate_episodes(market, ec, seed, n);
  return eval::episode_pnls(policy, eps, CostModel{fee}, true);
}

// --- 1 ----------------------------------------------------------------------

int criterion_1() {
  Report r{1};
  const auto t0 = Clock::now();
  OptionSpec spec;
  spec.strike = 100.0;
  spec.time_to_maturity = years_from_days(30);
  spec.rate = 0.0;
  const double c = bs_call_price(100.0, spec, 0.20);
  r.check(std::abs(c - kPriceTarget) <= kPriceTol,
          fmt("bs_call_price(100, 100, 30/365, 0.20) = %.6f, target %.2f +- %.2f", c, kPriceTarget,
              kPriceTol));
  for (double vol : {0.1, 0.2, 0.5}) {
    const double p = bs_call_price(100.0, spec, vol);
    const double back = implied_vol(p, 100.0, spec);
    r.check(std::abs(back - vol) <= kIvRoundTripTol,
            fmt("implied_vol round trip sigma=%.1f -> %.12f (tol %.0e)", vol, back, kIvRoundTripTol));
  }
  const double secs = seconds_since(t0);
  r.check(secs < 1.0, fmt("runtime %.3fs < 1s", secs));
  return r.finish();
}

// --- 2 ----------------------------------------------------------------------

int criterion_2() {
  Report r{2};
  const auto t0 = Clock::now();
  const auto x = normalized_pnls(eval::no_hedge_policy(), GbmParams{}, EpisodeConfig{}, 0.0,
                                 kSeedNoHedge, kDistributionEpisodes);
  const Moments m = moments(x);
  r.note(fmt("no hedge, %zu episodes: mean %.4f, variance %.4f, std %.4f", x.size(), m.mean,
             m.variance, std::sqrt(m.variance)));
  r.check(in_band(m.mean, kNoHedgeMeanLo, kNoHedgeMeanHi),
          fmt("mean %.4f in [%.2f, %.2f]", m.mean, kNoHedgeMeanLo, kNoHedgeMeanHi));
  r.check(in_band(m.variance, kNoHedgeVarLo, kNoHedgeVarHi),
          fmt("variance %.4f in [%.2f, %.2f]", m.variance, kNoHedgeVarLo, kNoHedgeVarHi));
  const double secs = seconds_since(t0);
  r.check(secs < 60.0, fmt("runtime %.1fs < 60s", secs));
  return r.finish();
}

// --- 3 and 4 ----------------------------------------------------------------

struct DeltaRun {
  Moments daily;
  Moments thrice;
};

DeltaRun delta_runs(double fee) {
  EpisodeConfig daily;
  EpisodeConfig thrice;
  thrice.steps_per_day = 3;
  DeltaRun d;
  d.daily = moments(normalized_pnls(eval::delta_policy(), GbmParams{}, daily, fee, kSeedDelta,
                                    kDistributionEpisodes));
  d.thrice = moments(normalized_pnls(eval::delta_policy(), GbmParams{}, thrice, fee, kSeedDelta,
                                     kDistributionEpisodes));
  return d;
}

int criterion_3() {
  Report r{3};
  const auto t0 = Clock::now();
  const DeltaRun d = delta_runs(0.0);
  r.note(fmt("delta, no fee, daily: mean %.4f, variance %.4f, std %.4f", d.daily.mean,
             d.daily.variance, std::sqrt(d.daily.variance)));
  r.note(fmt("delta, no fee, 3x/day: mean %.4f, variance %.4f, std %.4f", d.thrice.mean,
             d.thrice.variance, std::sqrt(d.thrice.variance)));
  r.check(in_band(d.daily.variance, kDailyVarLo, kDailyVarHi),
          fmt("daily variance %.4f in [%.2f, %.2f]", d.daily.variance, kDailyVarLo, kDailyVarHi));
  r.check(in_band(d.thrice.variance, kThriceVarLo, kThriceVarHi),
          fmt("3x/day variance %.4f in [%.2f, %.2f]", d.thrice.variance, kThriceVarLo,
              kThriceVarHi));
  r.check(std::abs(d.daily.mean) <= kZeroCostMeanTol,
          fmt("daily mean %.4f within +-%.2f of 0", d.daily.mean, kZeroCostMeanTol));
  r.check(std::abs(d.thrice.mean) <= kZeroCostMeanTol,
          fmt("3x/day mean %.4f within +-%.2f of 0", d.thrice.mean, kZeroCostMeanTol));
  r.check(d.thrice.variance < d.daily.variance, "3x/day variance < daily variance");
  const double secs = seconds_since(t0);
  r.check(secs < 180.0, fmt("runtime %.1fs < 180s", secs));
  return r.finish();
}

int criterion_4() {
  Report r{4};
  const auto t0 = Clock::now();
  const DeltaRun d = delta_runs(0.01);
  r.note(fmt("delta, 1%% fee, daily: mean %.4f, variance %.4f, std %.4f", d.daily.mean,
             d.daily.variance, std::sqrt(d.daily.variance)));
  r.note(fmt("delta, 1%% fee, 3x/day: mean %.4f, variance %.4f, std %.4f", d.thrice.mean,
             d.thrice.variance, std::sqrt(d.thrice.variance)));
  r.check(in_band(d.daily.mean, kCostDailyMeanLo, kCostDailyMeanHi),
          fmt("daily mean %.4f in [%.2f, %.2f]", d.daily.mean, kCostDailyMeanLo, kCostDailyMeanHi));
  r.check(in_band(d.thrice.mean, kCostThriceMeanLo, kCostThriceMeanHi),
          fmt("3x/day mean %.4f in [%.2f, %.2f]", d.thrice.mean, kCostThriceMeanLo,
              kCostThriceMeanHi));
  r.check(d.thrice.variance < d.daily.variance,
          fmt("3x/day variance %.4f < daily variance %.4f", d.thrice.variance, d.daily.variance));
  const double secs = seconds_since(t0);
  r.check(secs < 180.0, fmt("runtime %.1fs < 180s", secs));
  return r.finish();
}

// --- Desk-scale bundles (5, 9, 10) -----------------------------------------

double read_train_seconds(const fs::path& dir) {
  std::ifstream in(dir / "train_seconds.txt");
  double s = std::nan("");
  in >> s;
  return s;
}

int train_bundle(const std::string& variant, const fs::path& dir) {
  cli::RunConfig config;
  config.output_dir = dir;
  const auto t0 = Clock::now();
  cli::cmd_train(config, {cli::variant_from_string(variant)});
  const double secs = seconds_since(t0);
  std::ofstream(dir / "train_seconds.txt") << fmt("%.3f\n", secs);
  std::printf("trained %s into %s in %.1fs\n", variant.c_str(), dir.c_str(), secs);
  return 0;
}

int criterion_5(const fs::path& bundles) {
  Report r{5};
  const auto t0 = Clock::now();
  const cli::RunConfig config;
  const auto plain = agent::load_bundle(bundles / "ddpg");
  const auto unc = agent::load_bundle(bundles / "ddpg-uncertainty");
  r.note(fmt("training episodes per variant: %zu / %zu", plain.config.episodes, unc.config.episodes));
  const auto episodes = generate_episodes(config.market, config.episode,
                                          cli::stream_seed(config, cli::Stream::eval),
                                          config.eval_episodes);
  const auto table = eval::compare_strategies({{"delta", eval::delta_policy()},
                                               {"ddpg", agent::make_policy(plain.actor)},
                                               {"ddpg-uncertainty", agent::make_policy(unc.actor)}},
                                              episodes, CostModel{config.cost_rate});
  for (const auto& row : table.rows) {
    r.note(fmt("%-17s mean %.4f (cost %.4f), std %.4f, n %zu", row.name.c_str(), row.mean,
               -row.mean, row.std, row.n));
  }
  const double cu = -table.row("ddpg-uncertainty").mean;
  const double cp = -table.row("ddpg").mean;
  const double cd = -table.row("delta").mean;
  r.check(cu < cp, fmt("cost DDPG-uncertainty %.4f < DDPG %.4f", cu, cp));
  r.check(cp < cd, fmt("cost DDPG %.4f < BS-delta %.4f", cp, cd));
  for (const auto& a : table.rows) {
    for (const auto& b : table.rows) {
      if (&a == &b) continue;
      const double ratio = a.std / b.std;
      r.check(ratio >= 1.0 - kStdBand && ratio <= 1.0 + kStdBand,
              fmt("std %s / %s = %.3f within +-%.0f%%", a.name.c_str(), b.name.c_str(), ratio,
                  kStdBand * 100));
    }
  }
  const double train_secs = read_train_seconds(bundles / "ddpg") +
                            read_train_seconds(bundles / "ddpg-uncertainty");
  const double total = train_secs + seconds_since(t0);
  r.check(std::isfinite(total) && total < kDeskRuntimeSeconds,
          fmt("runtime %.1fs (training %.1fs) < %.0fs", total, train_secs, kDeskRuntimeSeconds));
  return r.finish();
}

// --- 6 ----------------------------------------------------------------------

// Plain DDPG written against the network primitives only: MSE TD loss, no
// variance head, no dropout, no penalty.
struct PlainDdpg {
  nn::DenseNet policy, critic, target_policy, target_critic;
  nn::AdamState policy_opt, critic_opt;
  agent::ReplayBuffer buffer;
  Rng replay_rng;
  agent::TrainConfig cfg;

  PlainDdpg(const agent::TrainConfig& c, std::uint64_t seed)
      : buffer(c.buffer_capacity), replay_rng(derive_seed(seed, 2)), cfg(c) {
    Rng init(derive_seed(seed, 0));
    const agent::Actor a = agent::Actor::create(c, init);
    const agent::Critic q = agent::Critic::create(c, init);
    policy = a.policy;
    critic = q.net;
    target_policy = policy;
    target_critic = critic;
    policy_opt = nn::AdamState::for_net(policy, {c.actor_lr});
    critic_opt = nn::AdamState::for_net(critic, {c.critic_lr});
  }

  static nn::Matrix join(const nn::Matrix& s, const nn::Matrix& a) {
    nn::Matrix x(s.rows() + 1, s.cols());
    x.topRows(s.rows()) = s;
    x.bottomRows(1) = a;
    return x;
  }

  void update() {
    const auto idx = buffer.sample_indices(cfg.batch_size, replay_rng);
    const auto n = static_cast<Eigen::Index>(idx.size());
    nn::Matrix s(static_cast<Eigen::Index>(kStateDim), n), s2(static_cast<Eigen::Index>(kStateDim), n);
    nn::Matrix a(1, n);
    std::vector<double> rew(idx.size()), done(idx.size());
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& t = buffer.at(idx[static_cast<std::size_t>(b)]);
      for (std::size_t i = 0; i < kStateDim; ++i) {
        s(static_cast<Eigen::Index>(i), b) = t.state[i];
        s2(static_cast<Eigen::Index>(i), b) = t.next_state[i];
      }
      a(0, b) = t.action;
      rew[static_cast<std::size_t>(b)] = t.reward;
      done[static_cast<std::size_t>(b)] = t.done ? 1.0 : 0.0;
    }
    const double inv_n = 1.0 / static_cast<double>(n);

    const nn::Matrix q_next = target_critic.forward(join(s2, target_policy.forward(s2)));
    nn::ForwardCache qc;
    const nn::Matrix q = critic.forward(join(s, a), qc);
    nn::Matrix up(1, n);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto k = static_cast<std::size_t>(b);
      const double y = rew[k] + cfg.discount * (1.0 - done[k]) * q_next(0, b);
      up(0, b) = -(y - q(0, b)) * inv_n;  // d/dq of mean 0.5 (y - q)^2
    }
    nn::adam_step(critic, critic.backward(qc, up), critic_opt);

    nn::ForwardCache pc, qc2;
    const nn::Matrix pa = policy.forward(s, pc);
    critic.forward(join(s, pa), qc2);
    const nn::Gradients g = critic.backward(qc2, nn::Matrix::Constant(1, n, -inv_n));
    nn::adam_step(policy, policy.backward(pc, g.input.bottomRows(1)), policy_opt);

    nn::blend_into(target_policy, policy, cfg.soft_update_rate);
    nn::blend_into(target_critic, critic, cfg.soft_update_rate);
  }
};

bool bit_equal(const nn::DenseNet& a, const nn::DenseNet& b) {
  if (a.num_layers() != b.num_layers()) return false;
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const auto& x = a.layers()[l];
    const auto& y = b.layers()[l];
    if (x.weight.size() != y.weight.size() || x.bias.size() != y.bias.size()) return false;
    if (std::memcmp(x.weight.data(), y.weight.data(), sizeof(double) * x.weight.size()) != 0) return false;
    if (std::memcmp(x.bias.data(), y.bias.data(), sizeof(double) * x.bias.size()) != 0) return false;
  }
  return true;
}

int criterion_6() {
  Report r{6};
  agent::TrainConfig c;
  c.learn_log_var = false;
  c.dropout = 0.0;
  c.epistemic_penalty = 0.0;
  c.batch_size = 64;
  agent::DdpgLearner learner(c, kSeedEquivalence);
  PlainDdpg plain(c, kSeedEquivalence);

  // Replay filled from real environment steps under a random policy.
  Rng fill(derive_seed(kSeedEquivalence, 99));
  const auto eps = generate_episodes(GbmParams{}, EpisodeConfig{}, kSeedEquivalence, 40);
  for (const auto& ep : eps) {
    AccountState acct = open_account(ep);
    for (std::size_t t = 0; t < ep.steps(); ++t) {
      const HedgeState s = build_state(ep, t, acct.position);
      const StepResult res = step(ep, acct, t, fill.uniform(), CostModel{0.01});
      agent::StoredTransition st;
      st.state = encode_state(s);
      st.action = res.applied_position;
      st.reward = agent::training_reward(res.reward, ep.premium, c);
      st.next_state = encode_state(build_state(ep, t + 1, res.applied_position));
      st.done = res.done;
      learner.buffer().push(st);
      plain.buffer.push(st);
      acct = res.account;
    }
  }
  r.note(fmt("replay size %zu, batch %zu", learner.buffer().size(), c.batch_size));

  r.check(bit_equal(learner.actor().policy, plain.policy) && bit_equal(learner.critic().net, plain.critic),
          "identical initial parameters");
  int first_diff = -1;
  for (int k = 0; k < kEquivalenceSteps && first_diff < 0; ++k) {
    learner.update();
    plain.update();
    const bool same = bit_equal(learner.actor().policy, plain.policy) &&
                      bit_equal(learner.critic().net, plain.critic) &&
                      bit_equal(learner.target_actor().policy, plain.target_policy) &&
                      bit_equal(learner.target_critic().net, plain.target_critic);
    if (!same) first_diff = k;
  }
  r.check(first_diff < 0, first_diff < 0
                              ? fmt("bit-identical actor, critic and targets over %d updates",
                                    kEquivalenceSteps)
                              : fmt("trajectories diverge at update %d", first_diff));
  StateVector z{};
  r.check(learner.actor().sigma2(z) == 1.0, "frozen variance head reports sigma^2 = 1");
  return r.finish();
}

// --- 7 ----------------------------------------------------------------------

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kGradientFloor});
}

nn::Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Worst relative error of d(sum w .* f(x))/d(params, x) against central differences.
double net_gradient_error(nn::DenseNet& net, const nn::Matrix& x, const nn::Matrix& w,
                          const nn::DropoutMask* mask) {
  nn::ForwardCache cache;
  net.forward(x, cache, mask);
  const nn::Gradients g = net.backward(cache, w);
  auto loss = [&] { return (net.forward(x, mask).array() * w.array()).sum(); };
  double worst = 0.0;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (nn::Matrix* p : {&net.layers()[l].weight}) {
      for (Eigen::Index k = 0; k < p->size(); ++k) {
        const double keep = p->data()[k];
        p->data()[k] = keep + kFdStep;
        const double up = loss();
        p->data()[k] = keep - kFdStep;
        const double dn = loss();
        p->data()[k] = keep;
        worst = std::max(worst, rel_err(g.weight[l].data()[k], (up - dn) / (2 * kFdStep)));
      }
    }
    auto& bias = net.layers()[l].bias;
    for (Eigen::Index k = 0; k < bias.size(); ++k) {
      const double keep = bias(k);
      bias(k) = keep + kFdStep;
      const double up = loss();
      bias(k) = keep - kFdStep;
      const double dn = loss();
      bias(k) = keep;
      worst = std::max(worst, rel_err(g.bias[l](k), (up - dn) / (2 * kFdStep)));
    }
  }
  nn::Matrix xx = x;
  for (Eigen::Index k = 0; k < xx.size(); ++k) {
    const double keep = xx.data()[k];
    xx.data()[k] = keep + kFdStep;
    const double up = (net.forward(xx, mask).array() * w.array()).sum();
    xx.data()[k] = keep - kFdStep;
    const double dn = (net.forward(xx, mask).array() * w.array()).sum();
    xx.data()[k] = keep;
    worst = std::max(worst, rel_err(g.input.data()[k], (up - dn) / (2 * kFdStep)));
  }
  return worst;
}

int criterion_7() {
  Report r{7};
  const auto t0 = Clock::now();
  using nn::Activation;
  double worst_layers = 0.0, worst_nll = 0.0, worst_td = 0.0;
  for (int seed = 0; seed < kGradientSeeds; ++seed) {
    Rng rng(derive_seed(kSeedGradients, static_cast<std::uint64_t>(seed)));
    // Smooth activations everywhere (relu kinks make central differences
    // ill-posed at isolated points; its derivative is covered in unit tests).
    nn::DenseNet net({5, 7, 6, 2}, {Activation::tanh, Activation::sigmoid, Activation::identity},
                     {0.25, 0.25});
    net.init_uniform(rng);
    const nn::Matrix x = random_matrix(rng, 5, 4);
    const nn::Matrix w = random_matrix(rng, 2, 4);
    const nn::DropoutMask mask = net.sample_mask(rng, 4);
    worst_layers = std::max(worst_layers, net_gradient_error(net, x, w, nullptr));
    worst_layers = std::max(worst_layers, net_gradient_error(net, x, w, &mask));

    // Gaussian NLL in residual and log-variance.
    for (int k = 0; k < 10; ++k) {
      const double res = 2.0 * rng.normal();
      const double lv = 3.0 * rng.normal();
      const nn::NllTerm t = nn::gaussian_nll(res, lv);
      const double dr = (nn::gaussian_nll(res + kFdStep, lv).loss - nn::gaussian_nll(res - kFdStep, lv).loss) / (2 * kFdStep);
      const double dl = (nn::gaussian_nll(res, lv + kFdStep).loss - nn::gaussian_nll(res, lv - kFdStep).loss) / (2 * kFdStep);
      worst_nll = std::max({worst_nll, rel_err(t.d_residual, dr), rel_err(t.d_log_var, dl)});
    }

    // Precision-weighted TD loss w.r.t. the Q output and through the
    // log-variance head's parameters.
    const Eigen::Index n = 6;
    nn::DenseNet head({static_cast<int>(kStateDim), 5, 1}, {Activation::tanh, Activation::identity});
    head.init_uniform(rng);
    const nn::Matrix states = random_matrix(rng, static_cast<Eigen::Index>(kStateDim), n);
    const nn::Vector y = random_matrix(rng, n, 1);
    const nn::Vector q = random_matrix(rng, n, 1);
    auto head_lv = [&] { return nn::Vector(head.forward(states).row(0).transpose()); };
    auto mean_loss = [&](const nn::Vector& qq, const nn::Vector& lv) {
      return agent::weighted_td_terms(y, qq, lv).loss.mean();
    };
    nn::ForwardCache hc;
    const nn::Vector lv = head.forward(states, hc).row(0).transpose();
    const agent::WeightedTdTerms terms = agent::weighted_td_terms(y, q, lv);
    for (Eigen::Index i = 0; i < n; ++i) {
      nn::Vector qp = q, qm = q;
      qp(i) += kFdStep;
      qm(i) -= kFdStep;
      const double fd = (mean_loss(qp, lv) - mean_loss(qm, lv)) / (2 * kFdStep);
      worst_td = std::max(worst_td, rel_err(terms.d_q(i) / static_cast<double>(n), fd));
    }
    const nn::Gradients hg = head.backward(hc, (terms.d_log_var / static_cast<double>(n)).transpose());
    for (std::size_t l = 0; l < head.num_layers(); ++l) {
      auto& wt = head.layers()[l].weight;
      for (Eigen::Index k = 0; k < wt.size(); ++k) {
        const double keep = wt.data()[k];
        wt.data()[k] = keep + kFdStep;
        const double up = mean_loss(q, head_lv());
        wt.data()[k] = keep - kFdStep;
        const double dn = mean_loss(q, head_lv());
        wt.data()[k] = keep;
        worst_td = std::max(worst_td, rel_err(hg.weight[l].data()[k], (up - dn) / (2 * kFdStep)));
      }
    }
  }
  r.check(worst_layers <= kGradientRelTol,
          fmt("network layers (params and inputs, with/without dropout): worst rel err %.2e <= %.0e",
              worst_layers, kGradientRelTol));
  r.check(worst_nll <= kGradientRelTol,
          fmt("Gaussian NLL (residual, log-variance): worst rel err %.2e", worst_nll));
  r.check(worst_td <= kGradientRelTol,
          fmt("precision-weighted TD loss (Q output, log-variance head): worst rel err %.2e", worst_td));
  r.note(fmt("%d seeds", kGradientSeeds));
  const double secs = seconds_since(t0);
  r.check(secs < 60.0, fmt("runtime %.1fs < 60s", secs));
  return r.finish();
}

// --- 8 ----------------------------------------------------------------------

int criterion_8() {
  Report r{8};
  agent::TrainConfig c;
  c.dropout = 0.0;
  Rng rng(kSeedMc);
  const agent::Critic deterministic = agent::Critic::create(c, rng);
  StateVector s{};
  for (auto& v : s) v = rng.normal();
  const double v0 = agent::epistemic_q_variance(deterministic, s, 0.5, kMcPasses, 1);
  r.check(v0 == 0.0, fmt("p = 0: epistemic variance %.17g == 0", v0));

  const std::vector<double> two{1.0, 3.0};
  const double v2 = agent::sample_variance(two);
  r.check(v2 == 2.0, fmt("T = 2 passes {1, 3}: variance %.17g == 2", v2));

  c.dropout = 0.1;
  const agent::Critic dropout = agent::Critic::create(c, rng);
  std::vector<double> est;
  for (int k = 0; k < kMcSeeds; ++k) {
    est.push_back(agent::epistemic_q_variance(dropout, s, 0.5, kMcPasses,
                                              derive_seed(kSeedMc, static_cast<std::uint64_t>(k))));
  }
  const Moments m = moments(est);
  const double rel = std::sqrt(m.variance) / m.mean;
  r.check(m.mean > 0.0 && rel < kMcRelStd,
          fmt("T = %d, %d seeds: mean %.3e, cross-seed std / mean %.4f < %.2f", kMcPasses, kMcSeeds,
              m.mean, rel, kMcRelStd));
  return r.finish();
}

// --- 9 ----------------------------------------------------------------------

int criterion_9(const fs::path& bundles) {
  Report r{9};
  const cli::RunConfig config;
  const auto unc = agent::load_bundle(bundles / "ddpg-uncertainty");
  const std::size_t steps = static_cast<std::size_t>(config.episode.maturity_days);
  const auto eps = generate_episodes(config.market, config.episode,
                                     cli::stream_seed(config, cli::Stream::calibration),
                                     (kCalibrationSamples + steps - 1) / steps);
  auto samples = eval::collect_calibration_samples(unc.actor, eps, CostModel{config.cost_rate});
  samples.sigma2.resize(kCalibrationSamples);
  samples.rewards.resize(kCalibrationSamples);
  const auto rep = eval::calibration_bins(samples.sigma2, samples.rewards, kCalibrationBins);
  for (const auto& b : rep.bins) {
    r.note(fmt("bin n=%zu mean sigma^2 %.4e realized var %.4e", b.n, b.mean_sigma2, b.realized_var));
  }
  r.check(rep.defined() && rep.spearman > kSpearmanMin,
          fmt("trained model, %zu held-out steps: Spearman %.4f > %.1f", rep.n, rep.spearman,
              kSpearmanMin));

  // Control: rewards drawn with exactly the predicted variance.
  Rng rng(kSeedCalibrationControl);
  std::vector<double> s2, rew;
  for (std::size_t i = 0; i < kCalibrationSamples; ++i) {
    const double v = 0.001 * std::exp(4.0 * rng.uniform());
    s2.push_back(v);
    rew.push_back(std::sqrt(v) * rng.normal());
  }
  const auto control = eval::calibration_bins(s2, rew, kCalibrationBins);
  r.check(control.spearman == 1.0, fmt("calibrated synthetic control: Spearman %.4f == 1", control.spearman));
  return r.finish();
}

// --- 10 ---------------------------------------------------------------------

int criterion_10(const fs::path& bundles) {
  Report r{10};
  const cli::RunConfig config;
  const auto unc = agent::load_bundle(bundles / "ddpg-uncertainty");
  const auto m = eval::make_grid(config.grid.moneyness_lo, config.grid.moneyness_hi,
                                 config.grid.moneyness_step);
  const auto tau = eval::make_grid(config.grid.tau_lo, config.grid.tau_hi, config.grid.tau_step);
  const auto model = eval::uncertainty_heatmap(unc.actor, m, tau, config.market.vol,
                                               config.market.initial_price);
  const double near_model = eval::region_mean(model, 0.0, kNearGap, kShortTauDays);
  const double far_model = eval::region_mean(model, kFarGap, 1.0, kShortTauDays);
  r.check(near_model > far_model,
          fmt("model sigma^2: near strike %.4e > far %.4e (tau <= %.0fd)", near_model, far_model,
              kShortTauDays));

  const auto eps = generate_episodes(config.market, config.episode,
                                     cli::stream_seed(config, cli::Stream::eval), config.eval_episodes);
  const auto realized = eval::realized_variance_heatmap(eval::delta_policy(), eps,
                                                        CostModel{config.cost_rate}, m, tau);
  const double near_real = eval::region_mean(realized, 0.0, kNearGap, kShortTauDays);
  const double far_real = eval::region_mean(realized, kFarGap, 1.0, kShortTauDays);
  r.check(near_real > far_real,
          fmt("delta realized reward variance: near strike %.4e > far %.4e", near_real, far_real));
  return r.finish();
}

// --- 11 ---------------------------------------------------------------------

int criterion_11(const fs::path& work) {
  Report r{11};
  const auto eps = generate_episodes(GbmParams{}, EpisodeConfig{}, kSeedRoundTrip, 50);
  std::vector<data::OptionQuoteRow> rows;
  data::UnderlierHistory history;
  data::Date start = data::parse_date("2021-01-04");
  for (const auto& ep : eps) {
    for (const auto& row : data::episode_to_chain(ep, start)) rows.push_back(row);
    data::merge_history(history, data::episode_history(ep, start));
    for (std::size_t i = 0; i < ep.nodes(); ++i) {
      history.emplace(start + std::chrono::days{static_cast<int>(i)}, ep.path.prices[i]);
    }
    start += std::chrono::days{80};
  }
  fs::create_directories(work);
  const fs::path chain = work / "roundtrip_chain.csv";
  data::write_chain_csv(chain, rows);
  const auto load = data::load_chain_csv(chain);
  r.check(load.rejects.empty() && load.rows.size() == rows.size(),
          fmt("chain CSV: %zu rows written, %zu parsed, %zu rejected", rows.size(), load.rows.size(),
              load.rejects.size()));
  std::vector<data::FeaturedEpisode> featured;
  for (const auto& c : data::filter_universe(load.rows)) {
    featured.push_back(data::compute_features(c, history));
  }
  const auto env = data::episodes_to_env(featured);
  r.check(env.size() == eps.size(), fmt("%zu of %zu contracts usable", env.size(), eps.size()));

  double worst_reward = 0.0, worst_sigma = 0.0;
  std::size_t sigma_rows = 0, flagged = 0;
  const Policy policy = eval::delta_policy(GbmParams{}.vol);
  for (std::size_t e = 0; e < std::min(env.size(), eps.size()); ++e) {
    const auto a = rollout(eps[e], policy, CostModel{0.01}).transitions;
    const auto b = rollout(env[e], policy, CostModel{0.01}).transitions;
    for (std::size_t t = 0; t < std::min(a.size(), b.size()); ++t) {
      worst_reward = std::max(worst_reward, std::abs(a[t].reward - b[t].reward));
    }
    if (a.size() != b.size()) worst_reward = INFINITY;
    for (std::size_t i = 0; i < featured[e].rows.size(); ++i) {
      const auto& row = featured[e].rows[i];
      if (featured[e].chain.days_to_expiry[i] == 0) continue;
      if (!row.valid) {
        ++flagged;
        continue;
      }
      worst_sigma = std::max(worst_sigma, std::abs(row.features.sigma_impl - GbmParams{}.vol));
      ++sigma_rows;
    }
  }
  r.check(worst_reward <= kRoundTripRewardTol,
          fmt("per-step rewards reproduced: worst |diff| %.3e <= %.0e", worst_reward, kRoundTripRewardTol));
  r.check(worst_sigma <= kSigmaRecoveryTol,
          fmt("implied vol recovered on %zu rows: worst |sigma - 0.2| %.3e <= %.0e", sigma_rows,
              worst_sigma, kSigmaRecoveryTol));
  r.note(fmt("%zu rows flagged (mark at intrinsic value, no implied vol)", flagged));

  // Universe bounds on the hand-built fixtures.
  const fs::path fixtures{HEDGEKIT_FIXTURE_DIR};
  const auto three = data::filter_universe(data::load_chain_csv(fixtures / "chain_3contracts.csv").rows);
  r.check(three.size() == 1 && three[0].days_to_expiry.front() == 20,
          "10d/20d/60d fixture: only the 20-day contract survives");
  const auto bounds = data::filter_universe(data::load_chain_csv(fixtures / "chain_boundaries.csv").rows);
  bool bounds_ok = bounds.size() == 2;
  if (bounds_ok) {
    bounds_ok = bounds[0].days_to_expiry.front() == 15 && bounds[1].days_to_expiry.front() == 40 &&
                bounds[0].size() == 2 && bounds[1].size() == 3;
  }
  r.check(bounds_ok, "14/15/40/41-day fixture: 15 and 40 kept, S/K = 1.25 row dropped");
  return r.finish();
}

// --- 12 ---------------------------------------------------------------------

int run(const std::string& args) {
  const std::string cmd = std::string(HEDGEKIT_CLI_PATH) + " " + args + " > /dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).generic_string()] = s.str();
  }
  return files;
}

int criterion_12(const fs::path& work) {
  Report r{12};
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path config = work / "config.json";
  {
    cli::RunConfig c;
    c.train.episodes = 30;
    c.train.warmup = 256;
    c.train.batch_size = 32;
    c.eval_episodes = 200;
    c.calibration_samples = 700;
    c.mc_passes_eval = 8;
    std::ofstream(config) << cli::to_json(c).dump(2) << '\n';
  }
  // Both runs write to the same place (reports record their input paths), and
  // the first run's files are snapshotted before the second starts.
  const std::string base = "--config " + config.string() + " --seed 7 --out ";
  const fs::path out = work / "run";
  const std::string o = out.string();
  std::map<std::string, std::string> a;
  for (const char* rep : {"first", "second"}) {
    fs::remove_all(out);
    std::vector<std::pair<std::string, std::string>> steps{
        {"simulate", base + o + "/sim simulate -n 3 --chain"},
        {"train ddpg", base + o + "/ddpg train --variant ddpg"},
        {"train ddpg-uncertainty", base + o + "/unc train --variant ddpg-uncertainty"},
        {"evaluate", base + o + "/eval evaluate --no-hedge --dump-trajectories --checkpoint ddpg=" +
                         o + "/ddpg --checkpoint unc=" + o + "/unc"},
        {"ingest", base + o + "/ingest ingest " + o + "/sim/chain.csv --history " + o + "/sim/history.csv"},
        {"evaluate ingested", base + o + "/eval_real evaluate --per-step --episodes " + o +
                                  "/ingest/episodes.json --checkpoint unc=" + o + "/unc"},
        {"heatmap", base + o + "/heatmap heatmap --checkpoint " + o + "/unc"},
        {"calibrate", base + o + "/calibrate calibrate --checkpoint " + o + "/unc"},
    };
    for (const auto& [name, args] : steps) {
      const int rc = run(args);
      if (rc != 0) r.check(false, fmt("%s run: '%s' exited %d", rep, name.c_str(), rc));
    }
    if (a.empty()) a = snapshot(out);
  }
  const auto b = snapshot(out);
  r.note(fmt("%zu output files per run", a.size()));
  std::size_t mismatched = 0;
  for (const auto& [name, content] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != content) {
      ++mismatched;
      r.note("differs: " + name);
    }
  }
  r.check(a.size() > 20 && a.size() == b.size() && mismatched == 0,
          fmt("byte-identical CSV/JSON outputs across reruns (%zu mismatched)", mismatched));
  return r.finish();
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    std::fprintf(stderr, "usage: hedgekit_acceptance <1-12> [--bundles DIR] [--work DIR]\n"
                         "       hedgekit_acceptance train <variant> DIR\n");
    return 2;
  }
  try {
    if (args[0] == "train" && args.size() == 3) return train_bundle(args[1], args[2]);
    fs::path bundles = "acceptance_bundles";
    fs::path work = "acceptance_work";
    for (std::size_t i = 1; i + 1 < args.size(); i += 2) {
      if (args[i] == "--bundles") bundles = args[i + 1];
      else if (args[i] == "--work") work = args[i + 1];
    }
    const int id = std::stoi(args[0]);
    switch (id) {
      case 1: return criterion_1();
      case 2: return criterion_2();
      case 3: return criterion_3();
      case 4: return criterion_4();
      case 5: return criterion_5(bundles);
      case 6: return criterion_6();
      case 7: return criterion_7();
      case 8: return criterion_8();
      case 9: return criterion_9(bundles);
      case 10: return criterion_10(bundles);
      case 11: return criterion_11(work / "11");
      case 12: return criterion_12(work / "12");
      default: break;
    }
  } catch (const std::exception& e) {
    std::printf("error: %s\ncriterion %s: FAIL\n", e.what(), args[0].c_str());
    return 1;
  }
  std::fprintf(stderr, "unknown criterion '%s'\n", args[0].c_str());
  return 2;
}
