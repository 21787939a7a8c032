#include <gtest/gtest.h>

#include "optrlsvi/agent_baselines.hpp"
#include "optrlsvi/agent_rlsvi.hpp"
#include "optrlsvi/errors.hpp"
#include "test_util.hpp"

namespace optrlsvi {
namespace {

// Plans from a private stream so the environment draws stay comparable.
void observe_episode(Agent& agent, const LowRankMdp& mdp, Rng& rng, std::size_t s,
                     const std::vector<std::size_t>& actions) {
  Rng plan_rng(0);
  agent.plan_episode(plan_rng);
  for (std::size_t t = 0; t < mdp.horizon(); ++t) {
    const Transition tr = step(mdp, t, s, actions[t], rng);
    agent.observe(t, s, actions[t], tr.reward, tr.next_state);
    s = tr.next_state;
  }
}

void play(Agent& agent, const LowRankMdp& mdp, Rng& rng) {
  agent.plan_episode(rng);
  std::size_t s = sample_initial_state(mdp, rng);
  for (std::size_t t = 0; t < mdp.horizon(); ++t) {
    const std::size_t a = agent.act(t, s, rng);
    const Transition tr = step(mdp, t, s, a, rng);
    agent.observe(t, s, a, tr.reward, tr.next_state);
    s = tr.next_state;
  }
}

TEST(BaselineKind, NamesRoundTrip) {
  for (auto kind : {BaselineKind::kUcb, BaselineKind::kGreedy, BaselineKind::kEpsilonGreedy}) {
    EXPECT_EQ(parse_baseline_kind(to_string(kind)), kind);
  }
  EXPECT_THROW((void)parse_baseline_kind("thompson"), InvalidArgument);
}

TEST(BaselineConfig, RejectsOutOfRange) {
  FeatureMap f(2, 2, 2, 2);
  BaselineConfig c;
  c.epsilon_explore = 1.5;
  EXPECT_THROW(BaselineAgent(f, c), InvalidArgument);
  c.epsilon_explore = 0.1;
  c.bonus_scale = -0.1;
  EXPECT_THROW(BaselineAgent(f, c), InvalidArgument);
}

TEST(Greedy, ReplaysObservedRewardingPath) {
  // Two states, two actions, H = 2. Only (s=0, a=1) then (s=1, a=0) pays.
  Matrix p0(4, 2), p1(4, 2);
  p0 << 1, 0,
        0, 1,
        0, 1,
        0, 1;
  p1 = p0;
  Vector r0 = Vector::Zero(4), r1 = Vector::Zero(4);
  r0[1] = 1.0;
  r1[2] = 1.0;
  const LowRankMdp mdp = testing::tabular_mdp({p0, p1}, {r0, r1}, 2, 2);
  BaselineConfig config;
  config.kind = BaselineKind::kGreedy;
  BaselineAgent agent(mdp.features, config);
  Rng rng(1);
  observe_episode(agent, mdp, rng, 0, {0, 0});
  observe_episode(agent, mdp, rng, 0, {1, 0});
  agent.plan_episode(rng);
  EXPECT_EQ(agent.act(0, 0, rng), 1u);
  EXPECT_EQ(agent.act(1, 1, rng), 0u);
}

TEST(Ucb, ZeroBonusEqualsGreedy) {
  const LowRankMdp mdp = generate_mixture_mdp(6, 3, 3, 3, 5);
  BaselineConfig ucb_config;
  ucb_config.bonus_scale = 0.0;
  BaselineConfig greedy_config = ucb_config;
  greedy_config.kind = BaselineKind::kGreedy;
  BaselineAgent ucb(mdp.features, ucb_config), greedy(mdp.features, greedy_config);
  Rng a(3), b(3);
  for (int k = 0; k < 30; ++k) {
    play(ucb, mdp, a);
    play(greedy, mdp, b);
  }
  ucb.plan_episode(a);
  greedy.plan_episode(b);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(ucb.theta_hat(t), greedy.theta_hat(t));
    for (std::size_t s = 0; s < 6; ++s) {
      for (std::size_t act = 0; act < 3; ++act) EXPECT_EQ(ucb.q_value(t, s, act), greedy.q_value(t, s, act));
    }
  }
}

TEST(Ucb, BonusAddsScaledNormAndClips) {
  FeatureMap f(1, 2, 2, 2);
  for (std::size_t t = 0; t < 2; ++t) {
    f.phi(t, 0, 0) = Vector::Unit(2, 0);
    f.phi(t, 0, 1) = Vector::Unit(2, 1) * 0.5;
  }
  BaselineConfig config;
  config.bonus_scale = 0.3;
  config.clip_high = false;
  BaselineAgent raw(f, config);
  config.bonus_scale = 10.0;
  config.clip_high = true;
  BaselineAgent clipped(f, config);
  Rng rng(1);
  raw.plan_episode(rng);
  clipped.plan_episode(rng);
  EXPECT_NEAR(raw.q_value(1, 0, 1), 0.3 * 0.5, 1e-15);
  EXPECT_EQ(clipped.q_value(0, 0, 0), 2.0);
  EXPECT_EQ(clipped.q_value(1, 0, 0), 1.0);
}

TEST(EpsilonGreedy, FullExplorationIsUniform) {
  const LowRankMdp mdp = generate_mixture_mdp(4, 4, 2, 2, 3);
  BaselineConfig config;
  config.kind = BaselineKind::kEpsilonGreedy;
  config.epsilon_explore = 1.0;
  BaselineAgent agent(mdp.features, config);
  Rng rng(10);
  agent.plan_episode(rng);
  std::vector<int> counts(4, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[agent.act(0, 1, rng)];
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 0.02);
  EXPECT_EQ(agent.explore_probability(), 1.0);
  const StochasticPolicy pi = agent.executed_policy();
  EXPECT_LE((pi[0].array() - 0.25).abs().maxCoeff(), 1e-15);
}

TEST(Baselines, FitMatchesNoiselessOptRlsvi) {
  const LowRankMdp mdp = generate_mixture_mdp(7, 3, 4, 3, 6);
  BaselineConfig bconfig;
  bconfig.kind = BaselineKind::kGreedy;
  bconfig.clip_high = false;
  BaselineAgent baseline(mdp.features, bconfig);
  RlsviConfig rconfig;
  rconfig.fixed_sigma = 0.0;
  rconfig.fixed_alpha_upper = 1e12;
  OptRlsviAgent rlsvi = OptRlsviAgent::for_mdp(mdp, rconfig);
  Rng rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, 2);
  for (int k = 0; k < 25; ++k) {
    std::vector<std::size_t> actions(4);
    for (auto& a : actions) a = pick(rng);
    Rng env_a(k), env_b(k);
    observe_episode(baseline, mdp, env_a, 0, actions);
    observe_episode(rlsvi, mdp, env_b, 0, actions);
  }
  baseline.plan_episode(rng);
  rlsvi.plan_episode(rng);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_LE((baseline.theta_hat(t) - rlsvi.theta_hat(t)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

}  // namespace
}  // namespace optrlsvi
