#include <benchmark/benchmark.h>

#include "hedgekit/ddpg_agent.hpp"
#include "hedgekit/evaluation.hpp"
#include "hedgekit/market_sim.hpp"
#include "hedgekit/option_analytics.hpp"

using namespace hedgekit;

namespace {

OptionSpec atm_spec() {
  OptionSpec s;
  s.strike = 100.0;
  s.time_to_maturity = 30.0 / 365.0;
  return s;
}

void BM_CallPrice(benchmark::State& state) {
  const OptionSpec spec = atm_spec();
  double spot = 95.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bs_call_price(spot, spec, 0.2));
    spot = spot < 105.0 ? spot + 0.01 : 95.0;
  }
}
BENCHMARK(BM_CallPrice);

void BM_Greeks(benchmark::State& state) {
  const OptionSpec spec = atm_spec();
  for (auto _ : state) benchmark::DoNotOptimize(bs_greeks(101.0, spec, 0.2));
}
BENCHMARK(BM_Greeks);

void BM_ImpliedVol(benchmark::State& state) {
  const OptionSpec spec = atm_spec();
  const double price = bs_call_price(100.0, spec, 0.35);
  for (auto _ : state) benchmark::DoNotOptimize(implied_vol(price, 100.0, spec));
}
BENCHMARK(BM_ImpliedVol);

void BM_GeneratePath(benchmark::State& state) {
  const double horizon = 30.0 / 365.0;
  const double dt = horizon / static_cast<double>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_gbm(GbmParams{}, horizon, dt, seed++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratePath)->Arg(30)->Arg(90)->Arg(720);

void BM_GenerateEpisode(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(generate_episode(GbmParams{}, EpisodeConfig{}, seed++));
}
BENCHMARK(BM_GenerateEpisode);

void BM_DeltaRollout(benchmark::State& state) {
  const auto eps = generate_episodes(GbmParams{}, EpisodeConfig{}, 5, 64);
  const Policy policy = eval::delta_policy();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rollout_pnl(eps[i++ % eps.size()], policy, CostModel{0.01}));
  }
}
BENCHMARK(BM_DeltaRollout);

void BM_NetForwardBackward(benchmark::State& state) {
  Rng rng(3);
  nn::DenseNet net({11, 64, 64, 1}, {nn::Activation::relu, nn::Activation::relu, nn::Activation::identity},
                   {0.1, 0.1});
  net.init_uniform(rng);
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  const nn::Matrix x = nn::Matrix::Random(11, batch);
  const nn::Matrix up = nn::Matrix::Constant(1, batch, 1.0 / static_cast<double>(batch));
  for (auto _ : state) {
    nn::ForwardCache cache;
    const nn::DropoutMask mask = net.sample_mask(rng, batch);
    net.forward(x, cache, &mask);
    benchmark::DoNotOptimize(net.backward(cache, up));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_NetForwardBackward)->Arg(1)->Arg(128);

void BM_McDropoutVariance(benchmark::State& state) {
  agent::TrainConfig c;
  Rng rng(4);
  const agent::Critic critic = agent::Critic::create(c, rng);
  StateVector s{};
  s[0] = 0.5;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(agent::epistemic_q_variance(critic, s, 0.5, static_cast<int>(state.range(0)), seed++));
  }
}
BENCHMARK(BM_McDropoutVariance)->Arg(30)->Arg(1000);

void learner_update(benchmark::State& state, bool uncertainty) {
  agent::TrainConfig c;
  c.learn_log_var = uncertainty;
  c.dropout = uncertainty ? 0.1 : 0.0;
  agent::DdpgLearner learner(c, 7);
  Rng rng(8);
  for (std::size_t i = 0; i < 4096; ++i) {
    agent::StoredTransition t;
    for (auto& v : t.state) v = rng.normal();
    for (auto& v : t.next_state) v = rng.normal();
    t.action = rng.uniform();
    t.reward = 0.1 * rng.normal();
    t.done = i % 30 == 29;
    learner.buffer().push(t);
  }
  for (auto _ : state) benchmark::DoNotOptimize(learner.update());
}

void BM_UpdatePlain(benchmark::State& state) { learner_update(state, false); }
void BM_UpdateUncertainty(benchmark::State& state) { learner_update(state, true); }
BENCHMARK(BM_UpdatePlain);
BENCHMARK(BM_UpdateUncertainty);

}  // namespace
BENCHMARK_MAIN();
