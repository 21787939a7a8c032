#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "optrlsvi/agent.hpp"

namespace optrlsvi {

/// Φ(x), the standard normal CDF.
double normal_cdf(double x);

/// Upper limit on the confidence parameter δ: Φ(-1) ≈ 0.1587.
double max_confidence_delta();

struct RlsviConfig {
  double lambda = 1.0;
  double delta = 0.1;
  double c1 = 1.0;
  double c2 = 1.0;
  // Shrinks σ by this factor and enlarges α_U (and α_L) by its inverse.
  double practical_scale = 1.0;
  // Planned episode budget K; δ' = δ / (16 H K) stays fixed past K.
  std::size_t planned_episodes = 1000;
  // Evaluate α_U, α_L at k = K instead of the current episode.
  bool freeze_cutoffs = false;
  std::size_t recompute_period = kDefaultRecomputePeriod;
  // Test and ablation hooks that bypass the schedule.
  std::optional<double> fixed_sigma;
  std::optional<double> fixed_alpha_upper;
};

/// Problem-dependent inputs to the schedule.
struct ProblemConstants {
  std::size_t horizon = 1;
  std::size_t dim = 1;
  double l_phi = 1.0;
  double l_psi = 1.0;
  double l_r = 1.0;
  double epsilon = 0.0;
};

ProblemConstants problem_constants(const LowRankMdp& mdp);

/// Confidence radii and the derived noise level and cutoffs at episode k.
///
///   √β_k = c₁ H d √log(H d k max(1,L_φ) max(1,L_ψ) max(1,L_r) λ / δ')
///   √ν_k = √β_k + √λ L_φ (3 H L_ψ + L_r) + 4 ε H √(d k)
///   √γ_k = c₂ √(d H ν_k log(d / δ'))
///   σ_k  = √(H ν_k),   α_U = 1 / (4 √γ_k),   α_L = α_U / 2
///
/// with δ' = δ / (16 H K). sigma, alpha_upper and alpha_lower already include
/// practical_scale; beta, nu and gamma do not.
struct NoiseSchedule {
  std::size_t k = 1;
  double delta_prime = 0.0;
  double practical_scale = 1.0;
  double beta = 0.0;
  double nu = 0.0;
  double gamma = 0.0;
  double sigma = 0.0;
  double alpha_upper = 0.0;
  double alpha_lower = 0.0;

  /// Bound on ‖ξ‖_Σ matched to the scaled σ: practical_scale·√γ_k.
  double xi_radius() const;
};

NoiseSchedule compute_schedule(const RlsviConfig& config,
                               const ProblemConstants& constants, std::size_t k);

enum class Regime { kLinear, kInterpolated, kDefault };

struct QBarValue {
  double value;
  Regime regime;
};

/// Interpolated action value: the linear value φᵀθ̄ when the feature norm is
/// at most α_L, the default value when it is at least α_U, and in between
///   (α_U - n)/(α_U - α_L)·φᵀθ̄ + (n - α_L)/(α_U - α_L)·default.
QBarValue q_bar(double linear_value, double norm, double default_value,
                double alpha_lower, double alpha_upper);

/// Same, evaluated from a feature, parameters and design at 0-based t
/// (default value H - t).
double q_bar(const Eigen::Ref<const Vector>& phi, const Vector& theta_bar,
             const DesignState& design, std::size_t t, std::size_t horizon,
             const NoiseSchedule& schedule);

/// Optimistic randomized least-squares value iteration.
class OptRlsviAgent final : public Agent {
 public:
  OptRlsviAgent(FeatureMap features, ProblemConstants constants,
                RlsviConfig config);
  static OptRlsviAgent for_mdp(const LowRankMdp& mdp, RlsviConfig config);

  std::string kind() const override { return "opt_rlsvi"; }

  /// Backward pass t = H-1..0: ridge fit on targets r + V̄_{t+1}(s'), then
  /// θ̄_t = θ̂_t + ξ_t with ξ_t ~ N(0, σ²Σ_t⁻¹). V̄_{t+1} uses this episode's
  /// already-perturbed θ̄_{t+1}.
  void plan_episode(Rng& rng) override;

  double q_value(std::size_t t, std::size_t s, std::size_t a) const override;
  QBarValue evaluate(std::size_t t, std::size_t s, std::size_t a) const;

  const LsviHistory& history() const override { return history_; }
  std::optional<CutoffInfo> cutoffs() const override;
  std::optional<Vector> pseudonoise(std::size_t t) const override { return xi_[t]; }

  const RlsviConfig& config() const { return config_; }
  const ProblemConstants& constants() const { return constants_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const Vector& theta_hat(std::size_t t) const { return theta_hat_[t]; }
  const Vector& xi(std::size_t t) const { return xi_[t]; }
  const Vector& theta_bar(std::size_t t) const { return theta_bar_[t]; }

  std::size_t memory_bytes() const override;

 protected:
  LsviHistory& mutable_history() override { return history_; }

 private:
  NoiseSchedule schedule_for_episode(std::size_t k) const;

  RlsviConfig config_;
  ProblemConstants constants_;
  LsviHistory history_;
  NoiseSchedule schedule_;
  std::vector<Vector> theta_hat_;
  std::vector<Vector> xi_;
  std::vector<Vector> theta_bar_;
};

}  // namespace optrlsvi
