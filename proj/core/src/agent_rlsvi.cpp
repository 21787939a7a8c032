#include "optrlsvi/agent_rlsvi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "optrlsvi/errors.hpp"

namespace optrlsvi {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double max_confidence_delta() { return normal_cdf(-1.0); }

ProblemConstants problem_constants(const LowRankMdp& mdp) {
  return {mdp.horizon(), mdp.dim(), mdp.features.l_phi, mdp.l_psi, mdp.l_r,
          mdp.epsilon};
}

double NoiseSchedule::xi_radius() const {
  return practical_scale * std::sqrt(gamma);
}

NoiseSchedule compute_schedule(const RlsviConfig& config,
                               const ProblemConstants& constants, std::size_t k) {
  const double delta_max = max_confidence_delta();
  if (!(config.delta > 0.0 && config.delta < delta_max)) {
    std::ostringstream msg;
    msg << "delta must satisfy 0 < delta < Phi(-1) ~= " << delta_max << ", got "
        << config.delta;
    throw InvalidArgument(msg.str());
  }
  if (k == 0) throw InvalidArgument("episode index k is 1-based");
  if (config.planned_episodes == 0) throw InvalidArgument("planned episode budget K must be positive");
  if (!(config.lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(config.c1 > 0.0) || !(config.c2 > 0.0)) throw InvalidArgument("c1 and c2 must be positive");
  if (!(config.practical_scale > 0.0)) throw InvalidArgument("practical_scale must be positive");
  if (!(constants.l_phi > 0.0) || !(constants.l_psi > 0.0) || !(constants.l_r > 0.0)) {
    throw InvalidArgument("L_phi, L_psi and L_r must be positive");
  }
  if (!(constants.epsilon >= 0.0)) throw InvalidArgument("epsilon must be nonnegative");
  if (constants.horizon == 0 || constants.dim == 0) throw InvalidArgument("H and d must be positive");

  const auto H = static_cast<double>(constants.horizon);
  const auto d = static_cast<double>(constants.dim);
  const auto kk = static_cast<double>(k);
  const double lambda = config.lambda;

  NoiseSchedule out;
  out.k = k;
  out.practical_scale = config.practical_scale;
  out.delta_prime = config.delta / (16.0 * H * static_cast<double>(config.planned_episodes));

  const double log_arg = H * d * kk * std::max(1.0, constants.l_phi) *
                         std::max(1.0, constants.l_psi) *
                         std::max(1.0, constants.l_r) * lambda / out.delta_prime;
  const double sqrt_beta =
      config.c1 * H * d * std::sqrt(std::max(0.0, std::log(log_arg)));
  const double sqrt_nu =
      sqrt_beta +
      std::sqrt(lambda) * constants.l_phi * (3.0 * H * constants.l_psi + constants.l_r) +
      4.0 * constants.epsilon * H * std::sqrt(d * kk);
  out.beta = sqrt_beta * sqrt_beta;
  out.nu = sqrt_nu * sqrt_nu;
  const double sqrt_gamma =
      config.c2 * std::sqrt(d * H * out.nu * std::log(d / out.delta_prime));
  out.gamma = sqrt_gamma * sqrt_gamma;

  out.sigma = config.practical_scale * std::sqrt(H * out.nu);
  out.alpha_upper = 1.0 / (4.0 * config.practical_scale * sqrt_gamma);
  out.alpha_lower = out.alpha_upper / 2.0;
  return out;
}

QBarValue q_bar(double linear_value, double norm, double default_value,
                double alpha_lower, double alpha_upper) {
  if (!(alpha_upper > alpha_lower)) {
    throw InvalidConfiguration("q_bar requires alpha_upper > alpha_lower");
  }
  if (norm <= alpha_lower) return {linear_value, Regime::kLinear};
  if (norm >= alpha_upper) return {default_value, Regime::kDefault};
  const double width = alpha_upper - alpha_lower;
  const double linear_weight = (alpha_upper - norm) / width;
  const double default_weight = (norm - alpha_lower) / width;
  return {linear_weight * linear_value + default_weight * default_value,
          Regime::kInterpolated};
}

double q_bar(const Eigen::Ref<const Vector>& phi, const Vector& theta_bar,
             const DesignState& design, std::size_t t, std::size_t horizon,
             const NoiseSchedule& schedule) {
  return q_bar(phi.dot(theta_bar), design.mahalanobis_norm(phi),
               static_cast<double>(horizon - t), schedule.alpha_lower,
               schedule.alpha_upper)
      .value;
}

OptRlsviAgent::OptRlsviAgent(FeatureMap features, ProblemConstants constants,
                             RlsviConfig config)
    : config_(config),
      constants_(constants),
      history_(std::move(features), config.lambda, config.recompute_period) {
  const FeatureMap& f = history_.features();
  if (constants_.horizon != f.horizon() || constants_.dim != f.dim()) {
    throw InvalidArgument("problem constants disagree with the feature map");
  }
  if (config_.fixed_sigma && !(*config_.fixed_sigma >= 0.0)) {
    throw InvalidArgument("fixed sigma must be nonnegative");
  }
  if (config_.fixed_alpha_upper && !(*config_.fixed_alpha_upper > 0.0)) {
    throw InvalidArgument("fixed alpha_upper must be positive");
  }
  schedule_ = schedule_for_episode(1);
  const auto d = static_cast<Eigen::Index>(f.dim());
  theta_hat_.assign(f.horizon(), Vector::Zero(d));
  xi_.assign(f.horizon(), Vector::Zero(d));
  theta_bar_.assign(f.horizon(), Vector::Zero(d));
}

OptRlsviAgent OptRlsviAgent::for_mdp(const LowRankMdp& mdp, RlsviConfig config) {
  return OptRlsviAgent(mdp.features, problem_constants(mdp), config);
}

NoiseSchedule OptRlsviAgent::schedule_for_episode(std::size_t k) const {
  NoiseSchedule s = compute_schedule(config_, constants_, k);
  if (config_.freeze_cutoffs) {
    const NoiseSchedule frozen =
        compute_schedule(config_, constants_, config_.planned_episodes);
    s.alpha_upper = frozen.alpha_upper;
    s.alpha_lower = frozen.alpha_lower;
  }
  if (config_.fixed_sigma) s.sigma = *config_.fixed_sigma;
  if (config_.fixed_alpha_upper) {
    s.alpha_upper = *config_.fixed_alpha_upper;
    s.alpha_lower = s.alpha_upper / 2.0;
  }
  return s;
}

void OptRlsviAgent::plan_episode(Rng& rng) {
  mark_planned();
  schedule_ = schedule_for_episode(history_.episode());
  const FeatureMap& f = history_.features();
  const std::size_t H = f.horizon();
  const double variance = schedule_.sigma * schedule_.sigma;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> next_value(f.num_states());
  std::vector<double> targets;
  for (std::size_t t = H; t-- > 0;) {
    const auto& entries = history_.replay(t);
    targets.resize(entries.size());
    std::fill(next_value.begin(), next_value.end(), nan);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      double v = 0.0;
      if (t + 1 < H) {
        double& memo = next_value[entries[i].next_state];
        if (std::isnan(memo)) memo = value(t + 1, entries[i].next_state);
        v = memo;
      }
      targets[i] = entries[i].reward + v;
    }
    theta_hat_[t] = history_.ridge_solve(t, targets);
    xi_[t] = history_.design(t).sample_gaussian(variance, rng);
    theta_bar_[t] = theta_hat_[t] + xi_[t];
  }
}

QBarValue OptRlsviAgent::evaluate(std::size_t t, std::size_t s, std::size_t a) const {
  const FeatureMap& f = history_.features();
  const auto phi = f.phi(t, s, a);
  return q_bar(phi.dot(theta_bar_[t]), history_.design(t).mahalanobis_norm(phi),
               static_cast<double>(f.horizon() - t), schedule_.alpha_lower,
               schedule_.alpha_upper);
}

double OptRlsviAgent::q_value(std::size_t t, std::size_t s, std::size_t a) const {
  return evaluate(t, s, a).value;
}

std::optional<CutoffInfo> OptRlsviAgent::cutoffs() const {
  return CutoffInfo{schedule_.alpha_lower, schedule_.alpha_upper, schedule_.sigma,
                    std::sqrt(schedule_.beta), schedule_.xi_radius()};
}

std::size_t OptRlsviAgent::memory_bytes() const {
  const std::size_t d = history_.features().dim();
  return history_.memory_bytes() + sizeof(*this) + 3 * history_.horizon() * d * sizeof(double);
}

}  // namespace optrlsvi
