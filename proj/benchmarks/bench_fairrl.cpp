// Hot paths: exact decomposition, rollout collection and one PPO update.

#include <benchmark/benchmark.h>

#include "fairrl/analysis.hpp"
#include "fairrl/config.hpp"
#include "fairrl/policy.hpp"
#include "fairrl/trainer.hpp"

namespace {

using namespace fairrl;

EnvConfig env_with_levels(int levels) {
    auto env = preset("setting1");
    if (levels == env.num_levels) return env;
    // Flat tables are enough to time the DP at other sizes.
    env.num_levels = levels;
    const double flat = 1.0 / levels;
    env.init_score_dist.plus.assign(static_cast<std::size_t>(levels), flat);
    env.init_score_dist.minus.assign(static_cast<std::size_t>(levels), flat);
    env.repay_prob.plus.assign(static_cast<std::size_t>(levels), 0.7);
    env.repay_prob.minus.assign(static_cast<std::size_t>(levels), 0.6);
    env.validate();
    return env;
}

void BM_Decompose(benchmark::State& state) {
    const auto env = env_with_levels(static_cast<int>(state.range(0)));
    Rng rng(7);
    const auto params = random_policy(rng, env.num_levels, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(decompose(params, env, 0.5));
    }
}
BENCHMARK(BM_Decompose)->Arg(7)->Arg(15)->Arg(31);

void BM_CollectRollouts(benchmark::State& state) {
    const auto env = preset("setting1");
    Rng rng(11);
    const auto params = random_policy(rng, env.num_levels, 1.0);
    const int episodes = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(collect_rollouts(rng, params, env, episodes));
    }
    state.SetItemsProcessed(state.iterations() * episodes * env.horizon);
}
BENCHMARK(BM_CollectRollouts)->Arg(64)->Arg(256)->Arg(1024);

void BM_PpoUpdate(benchmark::State& state) {
    const auto env = preset("setting1");
    TrainConfig cfg;
    cfg.mode = state.range(0) == 0 ? TrainMode::oracle : TrainMode::sampled;
    cfg.beta_c = 1.0;
    cfg.algo = Algo::ppo_cb;
    cfg.beta_lambda = 1.0;
    Rng rng(13);
    const auto params = random_policy(rng, env.num_levels, 1.0);
    const auto batch = collect_rollouts(rng, params, env, cfg.episodes_per_iter);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ppo_update(params, batch, cfg, env, rng));
    }
}
BENCHMARK(BM_PpoUpdate)->Arg(0)->Arg(1)->ArgNames({"sampled"});

}  // namespace

BENCHMARK_MAIN();
