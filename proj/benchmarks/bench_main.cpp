#include <benchmark/benchmark.h>

#include "racer/actor.hpp"
#include "racer/critic.hpp"
#include "racer/risk.hpp"
#include "racer/rng.hpp"

using namespace racer;

namespace {

risk::CategoricalDistribution random_dist(Rng& rng, int n) {
  std::vector<double> atoms(n), probs(n);
  double pos = 0.0, total = 0.0;
  for (int i = 0; i < n; ++i) {
    pos += rng.uniform(0.05, 1.0);
    atoms[i] = pos;
    probs[i] = rng.uniform(0.05, 1.0);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return {atoms, probs};
}

void CvarCategorical(benchmark::State& state) {
  Rng rng(1);
  const auto d = random_dist(rng, static_cast<int>(state.range(0)));
  const risk::RiskLevel a(0.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(risk::cvar(d, a));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(CvarCategorical)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void TailEmd(benchmark::State& state) {
  Rng rng(2);
  const auto x = random_dist(rng, static_cast<int>(state.range(0)));
  const auto y = random_dist(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(risk::emd(x, y));
  }
}
BENCHMARK(TailEmd)->Range(16, 1024);

void ProjectTarget(benchmark::State& state) {
  Rng rng(3);
  const critic::AtomGrid grid(0.0, 100.0, 51);
  const auto src = random_dist(rng, 51);
  for (auto _ : state) {
    benchmark::DoNotOptimize(critic::project_target(grid, src, 0.5, 0.99));
  }
}
BENCHMARK(ProjectTarget);

void CriticLossBatch(benchmark::State& state) {
  Rng rng(4);
  const int n = static_cast<int>(state.range(0));
  critic::CriticEnsemble ensemble(3, 6, 2, {24, 24}, critic::AtomGrid(0, 100, 41), rng);
  train::TransitionBatch batch;
  batch.states = nn::Matrix(n, 6);
  batch.next_states = nn::Matrix(n, 6);
  batch.actions_applied = nn::Matrix(n, 2);
  batch.actions_pre = nn::Matrix(n, 2);
  batch.rewards.assign(n, 0.5);
  batch.done.assign(n, 0);
  batch.failed.assign(n, 0);
  for (double& x : batch.states.data) x = rng.uniform(-1, 1);
  for (double& x : batch.next_states.data) x = rng.uniform(-1, 1);
  for (double& x : batch.actions_applied.data) x = rng.uniform(0, 1);
  for (double& x : batch.actions_pre.data) x = rng.uniform(0, 1);
  const critic::ActionSampler sampler = [](std::span<const double>, Rng&) {
    critic::SampledActions out;
    out.pre = {0.1, 0.8};
    out.applied = {0.1, 0.5};
    return out;
  };
  critic::CriticLossConfig cfg;
  cfg.gamma = 0.98;
  for (auto _ : state) {
    benchmark::DoNotOptimize(critic::critic_loss(ensemble, batch, sampler, cfg, rng));
  }
}
BENCHMARK(CriticLossBatch)->Arg(32)->Arg(128);

void ActorLossBatch(benchmark::State& state) {
  Rng rng(5);
  const int n = static_cast<int>(state.range(0));
  critic::CriticEnsemble ensemble(3, 6, 2, {24, 24}, critic::AtomGrid(0, 100, 41), rng);
  nn::GaussianPolicy policy(nn::PolicySpec{6, 2, {24, 24}}, rng);
  actor::ActionLimits limits;
  limits.dims.push_back({1, 0.05, 0.6, 0.0, 1.0});
  const actor::ActionSpace space{{-1.0, 0.0}, {1.0, 1.0}};
  nn::Matrix states(n, 6), noise(n, 2);
  for (double& x : states.data) x = rng.uniform(-1, 1);
  for (double& x : noise.data) x = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(actor::actor_loss(ensemble, policy, limits, space,
                                               states, risk::RiskLevel(0.9), noise,
                                               true));
  }
}
BENCHMARK(ActorLossBatch)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
