#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "optrlsvi/errors.hpp"
#include "optrlsvi/mdp.hpp"
#include "test_util.hpp"

namespace optrlsvi {
namespace {

using testing::random_policy;
using testing::rollout_mean;
using testing::tabular_mdp;

Matrix one_hot_rows(const std::vector<std::size_t>& next, std::size_t num_states) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(next.size()),
                          static_cast<Eigen::Index>(num_states));
  for (std::size_t i = 0; i < next.size(); ++i) {
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(next[i])) = 1.0;
  }
  return m;
}

TEST(Validate, GeneratedMixtureIsClean) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LowRankMdp mdp = generate_mixture_mdp(8, 3, 4, 3, seed);
    const ValidationReport report = validate(mdp);
    EXPECT_TRUE(report.clean()) << report.describe();
    EXPECT_LE(report.reward_residual, 1e-12);
    EXPECT_LE(report.transition_residual, 1e-12);
    EXPECT_LE(mdp.features.l_phi, 1.0 + 1e-12);
  }
}

TEST(Validate, ScaledRowReportsRowSum) {
  LowRankMdp mdp = generate_mixture_mdp(6, 2, 3, 2, 4);
  mdp.transition[1].row(3) *= 1.01;
  const ValidationReport report = validate(mdp);
  ASSERT_EQ(report.count(ViolationKind::kRowSum), 1u);
  for (const auto& v : report.violations) {
    if (v.kind != ViolationKind::kRowSum) continue;
    EXPECT_EQ(v.t, 1u);
    EXPECT_EQ(mdp.features.pair(v.s, v.a), 3u);
    EXPECT_NEAR(v.magnitude, 0.01, 1e-12);
  }
  EXPECT_FALSE(report.solvable());
}

TEST(Validate, RewardPerturbationSetsResidual) {
  LowRankMdp mdp = generate_mixture_mdp(6, 3, 3, 2, 5);
  for (auto& r : mdp.reward) {
    for (auto& x : r) x += x < 0.5 ? 0.05 : -0.05;
  }
  const ValidationReport report = validate(mdp);
  EXPECT_NEAR(report.reward_residual, 0.05, 1e-12);
  EXPECT_GT(report.count(ViolationKind::kRewardResidual), 0u);
  EXPECT_TRUE(report.solvable());
  mdp.epsilon = 0.05 + 1e-12;
  EXPECT_EQ(validate(mdp).count(ViolationKind::kRewardResidual), 0u);
}

TEST(Validate, FlagsStructuralDefects) {
  LowRankMdp mdp = generate_mixture_mdp(5, 2, 2, 2, 1);
  mdp.reward[0][0] = 1.5;
  mdp.transition[1](0, 0) = -0.1;
  mdp.transition[1](0, 1) += 0.1;
  mdp.features.l_phi = 0.1;
  mdp.initial_distribution[0] = 0.5;
  const ValidationReport report = validate(mdp);
  EXPECT_GE(report.count(ViolationKind::kRewardRange), 1u);
  EXPECT_GE(report.count(ViolationKind::kNegativeProbability), 1u);
  EXPECT_GE(report.count(ViolationKind::kFeatureNorm), 1u);
  EXPECT_GE(report.count(ViolationKind::kInitialDistribution), 1u);
  EXPECT_FALSE(report.solvable());
  EXPECT_THROW((void)compute_optimal(mdp), PreconditionViolation);
}

TEST(Validate, NonFiniteAndShape) {
  LowRankMdp mdp = generate_mixture_mdp(5, 2, 2, 2, 1);
  mdp.psi[0](0, 0) = std::nan("");
  EXPECT_GE(validate(mdp).count(ViolationKind::kNonFinite), 1u);
  LowRankMdp shaped = generate_mixture_mdp(5, 2, 2, 2, 1);
  shaped.reward.pop_back();
  EXPECT_GE(validate(shaped).count(ViolationKind::kShape), 1u);
}

TEST(MixtureGenerator, Deterministic) {
  EXPECT_TRUE(identical(generate_mixture_mdp(7, 3, 4, 3, 99), generate_mixture_mdp(7, 3, 4, 3, 99)));
  EXPECT_FALSE(identical(generate_mixture_mdp(7, 3, 4, 3, 99), generate_mixture_mdp(7, 3, 4, 3, 98)));
}

TEST(MixtureGenerator, RejectsDimAboveStates) {
  try {
    (void)generate_mixture_mdp(10, 2, 2, 50, 1);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("d <= S"), std::string::npos);
  }
  EXPECT_THROW((void)generate_mixture_mdp(0, 2, 2, 0, 1), InvalidArgument);
}

// P_t^π = Φ_t^π Ψ_t has rank at most d.
TEST(MixtureGenerator, PolicyTransitionRankAtMostDim) {
  const LowRankMdp mdp = generate_mixture_mdp(5, 3, 4, 2, 7);
  EXPECT_TRUE(validate(mdp).clean());
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Policy pi = random_policy(mdp, rng);
    for (std::size_t t = 0; t < mdp.horizon(); ++t) {
      const Matrix p = policy_transition_matrix(mdp, t, pi);
      const Vector sv = Eigen::JacobiSVD<Matrix>(p).singularValues();
      for (Eigen::Index i = 2; i < sv.size(); ++i) {
        EXPECT_LE(sv[i], 1e-10);
        EXPECT_LE(sv[i], 1e-9 * sv[0]);
      }
    }
  }
}

TEST(MixtureGenerator, BasisFeaturesReproducePsiRows) {
  const std::size_t S = 4, A = 2, H = 2;
  LowRankMdp mdp = make_empty_mdp(S, A, H, S);
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (std::size_t t = 0; t < H; ++t) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(S); ++i) {
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(S); ++j) mdp.psi[t](i, j) = u(rng);
      mdp.psi[t].row(i) /= mdp.psi[t].row(i).sum();
    }
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const auto e = static_cast<Eigen::Index>((s + a) % S);
        mdp.features.phi(t, s, a) = Vector::Unit(static_cast<Eigen::Index>(S), e);
        mdp.transition[t].row(static_cast<Eigen::Index>(mdp.features.pair(s, a))) =
            mdp.psi[t].row(e);
      }
    }
  }
  tighten_constants(mdp);
  EXPECT_TRUE(validate(mdp).clean()) << validate(mdp).describe();
  EXPECT_EQ(validate(mdp).transition_residual, 0.0);
}

TEST(HardChain, OptimalValues) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const LowRankMdp a = generate_hard_chain(3, 5, seed);
    EXPECT_TRUE(validate(a).clean());
    EXPECT_EQ(a.dim(), 4u * 2u);
    EXPECT_DOUBLE_EQ(initial_value(a, compute_optimal(a)), 3.0);
    const LowRankMdp b = generate_hard_chain(2, 2, seed);
    EXPECT_DOUBLE_EQ(initial_value(b, compute_optimal(b)), 1.0);
  }
}

TEST(HardChain, GeneralValueAndSolution) {
  const LowRankMdp mdp = generate_hard_chain(6, 8, 11);
  const ValueTables opt = compute_optimal(mdp);
  EXPECT_DOUBLE_EQ(initial_value(mdp, opt), 3.0);
  const auto correct = hard_chain_solution(6, 11);
  for (std::size_t s = 0; s < 6; ++s) EXPECT_EQ(opt.greedy_policy[s][s], correct[s]);
}

TEST(HardChain, Preconditions) {
  try {
    (void)generate_hard_chain(5, 4, 1);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("H >= N"), std::string::npos);
  }
  EXPECT_THROW((void)generate_hard_chain(1, 4, 1), InvalidArgument);
}

TEST(HardChain, UniformPolicyMatchesMonteCarlo) {
  const LowRankMdp mdp = generate_hard_chain(3, 5, 2);
  const ValueTables exact = evaluate_policy(mdp, testing::uniform_policy(mdp));
  Rng rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, 1);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int e = 0; e < n; ++e) {
    std::size_t s = sample_initial_state(mdp, rng);
    double ret = 0.0;
    for (std::size_t t = 0; t < mdp.horizon(); ++t) {
      const Transition tr = step(mdp, t, s, pick(rng), rng);
      ret += tr.reward;
      s = tr.next_state;
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / n;
  const double sem = std::sqrt((sum_sq / n - mean * mean) / (n - 1));
  EXPECT_NEAR(mean, initial_value(mdp, exact), 3.0 * sem);
}

TEST(ComputeOptimal, SingleStateUnitReward) {
  for (std::size_t H : {1u, 3u, 7u}) {
    const LowRankMdp mdp = tabular_mdp(std::vector<Matrix>(H, Matrix::Ones(1, 1)),
                                       std::vector<Vector>(H, Vector::Ones(1)), 1, 1);
    const ValueTables v = compute_optimal(mdp);
    for (std::size_t t = 0; t < H; ++t) EXPECT_DOUBLE_EQ(v.v[t][0], static_cast<double>(H - t));
  }
}

TEST(ComputeOptimal, ZeroRewardZeroValue) {
  LowRankMdp mdp = generate_mixture_mdp(5, 2, 3, 2, 3);
  for (auto& r : mdp.reward) r.setZero();
  for (auto& th : mdp.theta_r) th.setZero();
  const ValueTables v = compute_optimal(mdp);
  for (const auto& vt : v.v) EXPECT_TRUE(vt.isZero(0.0));
}

TEST(ComputeOptimal, HandComputedTwoStep) {
  // Pairs (s,a) in order (0,0), (0,1), (1,0), (1,1).
  Matrix p0(4, 2), p1(4, 2);
  p0 << 0.5, 0.5,
        0.0, 1.0,
        1.0, 0.0,
        0.2, 0.8;
  p1 = Matrix::Constant(4, 2, 0.5);
  Vector r0(4), r1(4);
  r0 << 0.6, 0.1, 0.0, 0.3;
  r1 << 0.2, 0.9, 0.5, 0.4;
  const LowRankMdp mdp = tabular_mdp({p0, p1}, {r0, r1}, 2, 2);
  const ValueTables v = compute_optimal(mdp);
  // Last step: V_1(0) = 0.9 (a=1), V_1(1) = 0.5 (a=0).
  EXPECT_DOUBLE_EQ(v.v[1][0], 0.9);
  EXPECT_DOUBLE_EQ(v.v[1][1], 0.5);
  EXPECT_EQ(v.greedy_policy[1][0], 1u);
  EXPECT_EQ(v.greedy_policy[1][1], 0u);
  // First step: Q(0,0) = 0.6 + 0.7, Q(0,1) = 0.1 + 0.5, Q(1,0) = 0.9, Q(1,1) = 0.3 + 0.58.
  EXPECT_NEAR(v.q[0](0, 0), 1.3, 1e-15);
  EXPECT_NEAR(v.q[0](0, 1), 0.6, 1e-15);
  EXPECT_NEAR(v.q[0](1, 0), 0.9, 1e-15);
  EXPECT_NEAR(v.q[0](1, 1), 0.88, 1e-15);
  EXPECT_EQ(v.greedy_policy[0][0], 0u);
  EXPECT_EQ(v.greedy_policy[0][1], 0u);
}

TEST(ComputeOptimal, TiesGoToLowestAction) {
  const LowRankMdp mdp = tabular_mdp({Matrix::Ones(3, 1)}, {Vector::Constant(3, 0.5)}, 1, 3);
  EXPECT_EQ(compute_optimal(mdp).greedy_policy[0][0], 0u);
}

TEST(ComputeOptimal, ValueBoundsAndMaxStructure) {
  const LowRankMdp mdp = generate_mixture_mdp(9, 4, 5, 3, 12);
  const ValueTables v = compute_optimal(mdp);
  for (std::size_t t = 0; t < mdp.horizon(); ++t) {
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      EXPECT_GE(v.v[t][s], 0.0);
      EXPECT_LE(v.v[t][s], static_cast<double>(mdp.horizon() - t));
      EXPECT_EQ(v.v[t][s], v.q[t].row(static_cast<Eigen::Index>(s)).maxCoeff());
      EXPECT_EQ(v.q[t](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(v.greedy_policy[t][s])),
                v.v[t][s]);
    }
  }
}

TEST(EvaluatePolicy, GreedyOptimalMatchesOptimal) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LowRankMdp mdp = generate_mixture_mdp(10, 4, 5, 3, seed);
    const ValueTables opt = compute_optimal(mdp);
    const ValueTables pi = evaluate_policy(mdp, opt.greedy_policy);
    for (std::size_t t = 0; t < mdp.horizon(); ++t) {
      EXPECT_LE((pi.v[t] - opt.v[t]).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(EvaluatePolicy, SingleActionEqualsOptimal) {
  const LowRankMdp mdp = generate_mixture_mdp(6, 1, 4, 2, 8);
  const ValueTables opt = compute_optimal(mdp);
  const Policy only(4, std::vector<std::size_t>(6, 0));
  const ValueTables pi = evaluate_policy(mdp, only);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(pi.v[t], opt.v[t]);
}

TEST(EvaluatePolicy, RandomPolicyMatchesMonteCarlo) {
  const LowRankMdp mdp = generate_mixture_mdp(5, 3, 4, 2, 1);
  Rng rng(4);
  const Policy pi = random_policy(mdp, rng);
  const double exact = initial_value(mdp, evaluate_policy(mdp, pi));
  const auto mc = rollout_mean(mdp, pi, 100000, 123);
  EXPECT_NEAR(mc.mean, exact, 3.0 * mc.sem);
}

TEST(EvaluatePolicy, StochasticMatchesDeterministicOnPointMasses) {
  const LowRankMdp mdp = generate_mixture_mdp(6, 3, 3, 2, 2);
  Rng rng(5);
  const Policy pi = random_policy(mdp, rng);
  StochasticPolicy probs(3, Matrix::Zero(6, 3));
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t s = 0; s < 6; ++s) {
      probs[t](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(pi[t][s])) = 1.0;
    }
  }
  const ValueTables a = evaluate_policy(mdp, pi);
  const ValueTables b = evaluate_policy(mdp, probs);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_LE((a.v[t] - b.v[t]).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EvaluatePolicy, RejectsBadPolicies) {
  const LowRankMdp mdp = generate_mixture_mdp(4, 2, 2, 2, 2);
  Policy pi(2, std::vector<std::size_t>(4, 0));
  pi[1][2] = 2;
  EXPECT_THROW((void)evaluate_policy(mdp, pi), InvalidArgument);
  EXPECT_THROW((void)evaluate_policy(mdp, Policy(1, std::vector<std::size_t>(4, 0))),
               InvalidArgument);
}

TEST(Step, DeterministicRowAlwaysSameSuccessor) {
  const LowRankMdp mdp = tabular_mdp({one_hot_rows({2, 0, 1, 1, 0, 2}, 3)},
                                     {Vector::Zero(6)}, 3, 2);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(step(mdp, 0, 0, 0, rng).next_state, 2u);
}

TEST(Step, ReproducibleForSeed) {
  const LowRankMdp mdp = generate_mixture_mdp(8, 2, 2, 3, 6);
  Rng a(42), b(42);
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(step(mdp, 1, 3, 1, a).next_state, step(mdp, 1, 3, 1, b).next_state);
  }
}

TEST(Step, EmpiricalFrequency) {
  Matrix p(2, 2);
  p << 0.25, 0.75,
       0.25, 0.75;
  const LowRankMdp mdp = tabular_mdp({p}, {Vector::Constant(2, 0.4)}, 2, 1);
  Rng rng(8);
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Transition tr = step(mdp, 0, 0, 0, rng);
    ASSERT_EQ(tr.reward, 0.4);
    ones += tr.next_state == 1 ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.75, 0.01);
}

TEST(Step, RejectsBadIndices) {
  const LowRankMdp mdp = generate_mixture_mdp(4, 2, 2, 2, 2);
  Rng rng(1);
  EXPECT_THROW((void)step(mdp, 2, 0, 0, rng), InvalidArgument);
  EXPECT_THROW((void)step(mdp, 0, 4, 0, rng), InvalidArgument);
  EXPECT_THROW((void)step(mdp, 0, 0, 2, rng), InvalidArgument);
}

// Q^π_t is linear in φ_t on an exactly low-rank instance, with a bounded weight.
TEST(LinearRealizability, PolicyValuesAreLinearInFeatures) {
  Rng rng(77);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LowRankMdp mdp = generate_mixture_mdp(8, 3, 5, 3, seed);
    const Policy pi = random_policy(mdp, rng);
    const ValueTables v = evaluate_policy(mdp, pi);
    for (std::size_t t = 0; t < mdp.horizon(); ++t) {
      const Matrix design = mdp.features.timestep(t).transpose();  // (S·A) × d
      Vector q(design.rows());
      for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
          q[static_cast<Eigen::Index>(mdp.features.pair(s, a))] =
              v.q[t](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
        }
      }
      const Vector theta = design.colPivHouseholderQr().solve(q);
      EXPECT_LE((design * theta - q).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LE(theta.norm(),
                mdp.l_r + static_cast<double>(mdp.horizon() - 1 - t) * mdp.l_psi + 1e-9);
    }
  }
}

TEST(Perturb, RecordsAchievedEpsilon) {
  const LowRankMdp base = generate_mixture_mdp(6, 2, 3, 2, 2);
  const LowRankMdp noisy = perturb_transitions(base, 0.05, 9);
  const ValidationReport report = validate(noisy);
  EXPECT_TRUE(report.clean()) << report.describe();
  EXPECT_GT(noisy.epsilon, 0.0);
  EXPECT_DOUBLE_EQ(noisy.epsilon, report.transition_residual);
  EXPECT_LE(validate(perturb_transitions(base, 0.0, 9)).transition_residual, 1e-15);
}

}  // namespace
}  // namespace optrlsvi
