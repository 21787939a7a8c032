#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "optrlsvi/linalg.hpp"
#include "optrlsvi/mdp.hpp"

namespace optrlsvi {

/// One stored transition at a fixed timestep.
struct ReplayEntry {
  std::size_t state;
  std::size_t action;
  double reward;
  std::size_t next_state;
  Vector phi;
};

/// Per-timestep designs and replay buffers shared by every LSVI-style agent,
/// plus the plan/act/observe episode protocol bookkeeping.
class LsviHistory {
 public:
  LsviHistory(FeatureMap features, double lambda,
              std::size_t recompute_period = kDefaultRecomputePeriod);

  const FeatureMap& features() const { return features_; }
  std::size_t horizon() const { return features_.horizon(); }
  double lambda() const { return lambda_; }

  /// 1-based index of the episode currently being planned or played.
  std::size_t episode() const { return completed_episodes_ + 1; }
  std::size_t completed_episodes() const { return completed_episodes_; }
  /// Timestep the next observe() call must carry.
  std::size_t next_timestep() const { return next_timestep_; }
  bool mid_episode() const { return next_timestep_ != 0; }

  const DesignState& design(std::size_t t) const { return designs_[t]; }
  const std::vector<ReplayEntry>& replay(std::size_t t) const { return replay_[t]; }

  /// Appends to replay[t] and absorbs φ_t(s,a) into design[t]. Calls must
  /// run t = 0, 1, ..., H-1 within each episode.
  void record(std::size_t t, std::size_t s, std::size_t a, double r,
              std::size_t next_state);

  /// Σ_t⁻¹ Σ_i φ_ti·target_i.
  Vector ridge_solve(std::size_t t, const std::vector<double>& targets) const;

  std::size_t memory_bytes() const;

 private:
  FeatureMap features_;
  double lambda_;
  std::vector<DesignState> designs_;
  std::vector<std::vector<ReplayEntry>> replay_;
  std::size_t completed_episodes_ = 0;
  std::size_t next_timestep_ = 0;
};

/// Exploration cutoffs and noise level an agent used for its current plan.
struct CutoffInfo {
  double alpha_lower;
  double alpha_upper;
  double sigma;
  double sqrt_beta;     // radius for the projected environment noise
  double xi_radius;     // radius for ‖ξ‖_Σ, on the same scale as sigma
};

/// Episode protocol common to opt-RLSVI and the baselines:
/// plan_episode() once before t = 0, then act()/observe() for t = 0..H-1.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string kind() const = 0;

  virtual void plan_episode(Rng& rng) = 0;

  /// Acting Q-value of the current plan.
  virtual double q_value(std::size_t t, std::size_t s, std::size_t a) const = 0;

  /// Greedy action, ties to the lowest index. Randomized agents override.
  virtual std::size_t act(std::size_t t, std::size_t s, Rng& rng);

  void observe(std::size_t t, std::size_t s, std::size_t a, double r,
               std::size_t next_state);

  /// Records a past transition without a plan; used to rebuild an agent from
  /// a checkpoint. Still enforces the t = 0..H-1 order.
  void restore(std::size_t t, std::size_t s, std::size_t a, double r,
               std::size_t next_state) {
    mutable_history().record(t, s, a, r, next_state);
  }

  /// Probability of replacing the greedy action with a uniform one.
  virtual double explore_probability() const { return 0.0; }

  virtual const LsviHistory& history() const = 0;

  /// Present only for agents that interpolate toward a default value.
  virtual std::optional<CutoffInfo> cutoffs() const { return std::nullopt; }

  /// Pseudonoise ξ_t of the current plan, when the agent has one.
  virtual std::optional<Vector> pseudonoise(std::size_t t) const {
    (void)t;
    return std::nullopt;
  }

  virtual std::size_t memory_bytes() const { return history().memory_bytes(); }

  bool planned() const { return planned_; }

  /// max_a q_value(t, s, a); zero at t = H.
  double value(std::size_t t, std::size_t s) const;
  std::size_t greedy_action(std::size_t t, std::size_t s) const;

  /// The decision rule the current plan executes, enumerated over (t, s).
  StochasticPolicy executed_policy() const;

 protected:
  virtual LsviHistory& mutable_history() = 0;
  void mark_planned();
  void require_planned(const char* operation) const;

 private:
  bool planned_ = false;
};

}  // namespace optrlsvi
