#pragma once

// Finite-horizon tabular MDPs with explicit low-rank factors.
//
// Timesteps are 0-based throughout the library: t ∈ {0, ..., H-1}. The
// optimistic default value at timestep t is therefore H - t, and V at t = H
// is identically zero.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "optrlsvi/linalg.hpp"

namespace optrlsvi {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Deterministic nonstationary policy: policy[t][s] is an action index.
using Policy = std::vector<std::vector<std::size_t>>;

/// Randomized nonstationary policy: probs[t](s, a).
using StochasticPolicy = std::vector<Matrix>;

/// φ_t(s, a) for every (t, s, a), stored per timestep as a d × (S·A) matrix
/// whose column s·A + a is the feature vector.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t num_states, std::size_t num_actions,
             std::size_t horizon, std::size_t dim);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t dim() const { return dim_; }
  std::size_t pair(std::size_t s, std::size_t a) const {
    return s * num_actions_ + a;
  }

  Matrix::ConstColXpr phi(std::size_t t, std::size_t s, std::size_t a) const {
    return table_[t].col(static_cast<Eigen::Index>(pair(s, a)));
  }
  Matrix::ColXpr phi(std::size_t t, std::size_t s, std::size_t a) {
    return table_[t].col(static_cast<Eigen::Index>(pair(s, a)));
  }
  const Matrix& timestep(std::size_t t) const { return table_[t]; }

  /// Largest ‖φ_t(s,a)‖₂ over the table.
  double max_norm() const;

  // L_φ: declared bound on ‖φ‖₂.
  double l_phi = 1.0;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t horizon_ = 0;
  std::size_t dim_ = 0;
  std::vector<Matrix> table_;
};

/// Tabular MDP whose transitions and rewards are (approximately) linear in
/// the features: ℙ_t(·|s,a) ≈ φ_t(s,a)ᵀΨ_t and r_t(s,a) ≈ φ_t(s,a)ᵀθ^r_t.
struct LowRankMdp {
  FeatureMap features;
  std::vector<Matrix> psi;                // per t: d × S, column s' is ψ_t(s')
  std::vector<Vector> theta_r;            // per t: d
  std::vector<RowMajorMatrix> transition; // per t: (S·A) × S
  std::vector<Vector> reward;             // per t: S·A, values in [0, 1]
  Vector initial_distribution;            // over S
  double epsilon = 0.0;                   // declared misspecification
  double l_psi = 1.0;
  double l_r = 1.0;

  std::size_t num_states() const { return features.num_states(); }
  std::size_t num_actions() const { return features.num_actions(); }
  std::size_t horizon() const { return features.horizon(); }
  std::size_t dim() const { return features.dim(); }

  double r(std::size_t t, std::size_t s, std::size_t a) const {
    return reward[t][static_cast<Eigen::Index>(features.pair(s, a))];
  }
  RowMajorMatrix::ConstRowXpr row(std::size_t t, std::size_t s,
                                  std::size_t a) const {
    return transition[t].row(static_cast<Eigen::Index>(features.pair(s, a)));
  }
};

/// True when every table and constant matches bit for bit.
bool identical(const LowRankMdp& a, const LowRankMdp& b);

/// Allocates every table with zeros and a point-mass initial state 0.
LowRankMdp make_empty_mdp(std::size_t num_states, std::size_t num_actions,
                          std::size_t horizon, std::size_t dim);

/// Sets l_phi, l_psi and l_r to the tight values realized by the tables.
void tighten_constants(LowRankMdp& mdp);

enum class ViolationKind {
  kShape,
  kNonFinite,
  kNegativeProbability,
  kRowSum,
  kRewardRange,
  kRewardResidual,
  kTransitionResidual,
  kFeatureNorm,
  kPsiNorm,
  kThetaNorm,
  kInitialDistribution,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t t = 0;
  std::size_t s = 0;
  std::size_t a = 0;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // max_{t,s,a} |r - φᵀθ^r| and ‖ℙ(·|s,a) - φᵀΨ‖₁.
  double reward_residual = 0.0;
  double transition_residual = 0.0;

  bool clean() const { return violations.empty(); }
  /// True when nothing breaks the dynamic-programming oracles: shapes, finite
  /// values, probability rows, reward range and the initial distribution.
  bool solvable() const;
  std::size_t count(ViolationKind kind) const;
  std::string describe() const;
};

ValidationReport validate(const LowRankMdp& mdp);

/// Exactly low-rank instance (ε = 0): transitions are mixtures of d anchor
/// distributions with simplex-valued features. Requires d ≤ S.
LowRankMdp generate_mixture_mdp(std::size_t num_states, std::size_t num_actions,
                                std::size_t horizon, std::size_t dim,
                                std::uint64_t seed);

/// Combination lock over states 0..N with one-hot (state, action) features.
/// The correct action in state i < N moves to i+1, every other action resets
/// to 0. Entering N pays 1 and N absorbs with reward 1 per step, so the
/// optimal value from state 0 at t = 0 is H - N + 1. Requires H ≥ N ≥ 2.
LowRankMdp generate_hard_chain(std::size_t chain_length, std::size_t horizon,
                               std::uint64_t seed, std::size_t num_actions = 2);

/// Correct action per chain state, as drawn by generate_hard_chain.
std::vector<std::size_t> hard_chain_solution(std::size_t chain_length,
                                             std::uint64_t seed,
                                             std::size_t num_actions = 2);

/// Misspecification knob: adds uniform [0, magnitude) noise to every
/// transition probability, renormalizes, and records the achieved ε.
LowRankMdp perturb_transitions(const LowRankMdp& mdp, double magnitude,
                               std::uint64_t seed);

/// Whether an oracle re-validates its MDP first. Callers that validated
/// once up front may skip the per-call check.
enum class Check { kValidate, kAssumeValid };

struct ValueTables {
  std::vector<Matrix> q;  // per t: S × A
  std::vector<Vector> v;  // per t: S, size H (V_H ≡ 0 is implicit)
  Policy greedy_policy;
};

/// Backward DP for Q⋆/V⋆. Ties break toward the lowest action index.
ValueTables compute_optimal(const LowRankMdp& mdp, Check check = Check::kValidate);

/// Backward DP for a deterministic nonstationary policy.
ValueTables evaluate_policy(const LowRankMdp& mdp, const Policy& policy,
                            Check check = Check::kValidate);

/// Backward DP for a randomized policy; greedy_policy is left empty.
ValueTables evaluate_policy(const LowRankMdp& mdp,
                            const StochasticPolicy& policy,
                            Check check = Check::kValidate);

/// Expected value of V over s_1 drawn from the initial distribution.
double initial_value(const LowRankMdp& mdp, const ValueTables& values);

struct Transition {
  std::size_t next_state;
  double reward;
};

/// Samples s' ~ ℙ_t(·|s,a) by inverse CDF; r = r_t(s,a).
Transition step(const LowRankMdp& mdp, std::size_t t, std::size_t s,
                std::size_t a, Rng& rng);

std::size_t sample_initial_state(const LowRankMdp& mdp, Rng& rng);

/// P_t^π as an S × S matrix.
Matrix policy_transition_matrix(const LowRankMdp& mdp, std::size_t t,
                                const Policy& policy);

}  // namespace optrlsvi
