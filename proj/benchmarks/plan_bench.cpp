#include <benchmark/benchmark.h>

#include "optrlsvi/agent_rlsvi.hpp"
#include "optrlsvi/harness.hpp"
#include "optrlsvi/mdp.hpp"

namespace {

using namespace optrlsvi;

// Planning cost after K recorded episodes on a mid-sized mixture MDP.
void BM_PlanEpisode(benchmark::State& state) {
  const auto episodes = static_cast<std::size_t>(state.range(0));
  const LowRankMdp mdp = generate_mixture_mdp(20, 5, 10, 10, 7);
  RlsviConfig config;
  config.planned_episodes = episodes;
  OptRlsviAgent agent = OptRlsviAgent::for_mdp(mdp, config);
  RunOptions options;
  options.episodes = episodes;
  options.seed = 11;
  options.diagnostics = false;
  run(mdp, agent, options);

  Rng rng(13);
  for (auto _ : state) {
    agent.plan_episode(rng);
    benchmark::DoNotOptimize(agent.theta_bar(0).data());
  }
}
BENCHMARK(BM_PlanEpisode)->Arg(100)->Arg(200)->Arg(400)->Arg(800)
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
