#pragma once

#include <string>
#include <vector>

#include "optrlsvi/agent.hpp"

namespace optrlsvi {

enum class BaselineKind { kUcb, kGreedy, kEpsilonGreedy };

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kUcb;
  // Multiplier on the ‖φ‖_{Σ⁻¹} bonus (ucb only).
  double bonus_scale = 1.0;
  // Probability of a uniform action (epsilon_greedy only).
  double epsilon_explore = 0.1;
  double lambda = 1.0;
  // Clip acting and target Q-values to [0, H - t].
  bool clip_high = true;
  std::size_t recompute_period = kDefaultRecomputePeriod;
};

/// Least-squares value iteration without pseudonoise: Q = φᵀθ̂, plus
/// bonus_scale·‖φ‖_{Σ⁻¹} for the UCB variant.
class BaselineAgent final : public Agent {
 public:
  BaselineAgent(FeatureMap features, BaselineConfig config);

  std::string kind() const override { return to_string(config_.kind); }

  void plan_episode(Rng& rng) override;
  double q_value(std::size_t t, std::size_t s, std::size_t a) const override;
  std::size_t act(std::size_t t, std::size_t s, Rng& rng) override;
  double explore_probability() const override;

  const LsviHistory& history() const override { return history_; }
  const BaselineConfig& config() const { return config_; }
  const Vector& theta_hat(std::size_t t) const { return theta_hat_[t]; }

 protected:
  LsviHistory& mutable_history() override { return history_; }

 private:
  BaselineConfig config_;
  LsviHistory history_;
  std::vector<Vector> theta_hat_;
};

}  // namespace optrlsvi
