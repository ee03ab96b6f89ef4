#include <benchmark/benchmark.h>

#include <random>

#include "sparsestep/observation.hpp"
#include "sparsestep/ppo.hpp"
#include "sparsestep/rnd.hpp"
#include "sparsestep/sim.hpp"
#include "sparsestep/symmetry.hpp"

namespace sparsestep {
namespace {

void BM_TerrainGenerate(benchmark::State& st) {
  const TerrainParams p = level_params(TerrainType::kStonesEverywhere, static_cast<int>(st.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(generate(p, ++seed));
}
BENCHMARK(BM_TerrainGenerate)->Arg(0)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_SimBatchStep(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const TerrainPool pool(TerrainType::kStonesEverywhere, 2, 1, 3);
  const Simulator sim;
  const RandomizationConfig rand = RandomizationConfig::for_task(TerrainType::kStonesEverywhere);
  std::mt19937_64 rng(1);
  std::vector<RobotState> states;
  std::vector<std::shared_ptr<const TerrainGrid>> keep;
  std::vector<const TerrainGrid*> grids;
  for (int i = 0; i < n; ++i) {
    EpisodeStart e = sim.reset(i % 4, pool, rand, rng);
    states.push_back(e.state);
    grids.push_back(e.grid.get());
    keep.push_back(e.grid);
  }
  std::vector<Vec12> actions(n, Vec12::Zero());
  std::normal_distribution<double> g(0.0, 0.05);
  for (auto& a : actions) {
    for (int k = 0; k < kJointDim; ++k) a[k] = g(rng);
  }
  std::vector<StepEvents> events(n);
  const std::vector<RobotState> initial = states;
  int k = 0;
  for (auto _ : st) {
    sim.batch_step(states, actions, grids, events);
    if (++k % 100 == 0) states = initial;
  }
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_SimBatchStep)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Observation(benchmark::State& st) {
  const TerrainPool pool(TerrainType::kStonesEverywhere, 1, 1, 0);
  const Simulator sim;
  std::mt19937_64 rng(2);
  const EpisodeStart e =
      sim.reset(0, pool, RandomizationConfig::for_task(TerrainType::kStonesEverywhere), rng);
  ObservationContext ctx;
  ctx.grid = e.grid.get();
  std::vector<float> out(SymmetryMap().obs_dim());
  for (auto _ : st) {
    build_observation(e.state, e.command, ctx, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Observation);

void BM_MlpForward(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Mlp<float> mlp(167, {512, 256, 128}, 12, Activation::kElu);
  std::mt19937_64 rng(3);
  mlp.init(rng);
  const MatX<float> x = MatX<float>::Random(167, n);
  for (auto _ : st) benchmark::DoNotOptimize(mlp.forward(x).data());
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_MlpForward)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_MlpBackward(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Mlp<float> mlp(167, {512, 256, 128}, 12, Activation::kElu);
  std::mt19937_64 rng(4);
  mlp.init(rng);
  const MatX<float> x = MatX<float>::Random(167, n);
  Mlp<float>::Cache cache;
  const MatX<float> y = mlp.forward(x, cache);
  VecX<float> grad = VecX<float>::Zero(mlp.num_params());
  for (auto _ : st) benchmark::DoNotOptimize(mlp.backward(cache, y, grad, false).data());
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_MlpBackward)->Arg(4096)->Unit(benchmark::kMillisecond);

RolloutBatch random_batch(const Policy& p, int n) {
  RolloutBatch b;
  b.resize(p.net.obs_dim(), p.net.act_dim(), n);
  b.observations.setRandom();
  b.old_mean = p.mean_action(b.observations);
  b.old_std = p.net.std_dev().replicate(1, n);
  b.actions = b.old_mean + MatX<float>::Random(p.net.act_dim(), n);
  b.old_log_prob = ActorCritic::log_prob(b.actions, b.old_mean, p.net.log_std);
  b.advantages.setRandom();
  b.returns.setRandom();
  b.values.setZero();
  return b;
}

void BM_PpoUpdate(benchmark::State& st) {
  PolicyConfig pc;
  pc.actor_hidden = {128, 64};
  pc.critic_hidden = {128, 64};
  const Policy base(167, kJointDim, pc, 5);
  const RolloutBatch batch = random_batch(base, static_cast<int>(st.range(0)));
  PpoConfig cfg;
  std::mt19937_64 rng(5);
  for (auto _ : st) {
    Policy p = base;
    Adam<float> adam(p.net.num_params(), 1e-3);
    benchmark::DoNotOptimize(ppo_update(p, adam, batch, cfg, rng).kl);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0) * cfg.epochs);
}
BENCHMARK(BM_PpoUpdate)->Arg(256 * 48)->Unit(benchmark::kMillisecond);

void BM_Augment(benchmark::State& st) {
  const SymmetryMap map;
  const Policy p(map.obs_dim(), kJointDim, PolicyConfig{}, 6);
  const RolloutBatch batch = random_batch(p, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(augment(batch, map).size());
}
BENCHMARK(BM_Augment)->Arg(256 * 48)->Unit(benchmark::kMillisecond);

void BM_RndReward(benchmark::State& st) {
  RndConfig cfg;
  Rnd rnd(167 + kJointDim, cfg, 7);
  const MatX<float> x = MatX<float>::Random(167 + kJointDim, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(rnd.reward(x).data());
}
BENCHMARK(BM_RndReward)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace sparsestep

BENCHMARK_MAIN();
