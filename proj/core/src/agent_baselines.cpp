#include "optrlsvi/agent_baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optrlsvi/errors.hpp"

namespace optrlsvi {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kUcb: return "ucb";
    case BaselineKind::kGreedy: return "greedy";
    case BaselineKind::kEpsilonGreedy: return "epsilon_greedy";
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "ucb") return BaselineKind::kUcb;
  if (name == "greedy") return BaselineKind::kGreedy;
  if (name == "epsilon_greedy") return BaselineKind::kEpsilonGreedy;
  throw InvalidArgument("unknown baseline kind '" + name + "'");
}

BaselineAgent::BaselineAgent(FeatureMap features, BaselineConfig config)
    : config_(config), history_(std::move(features), config.lambda, config.recompute_period) {
  if (!(config_.bonus_scale >= 0.0)) throw InvalidArgument("bonus_scale must be >= 0");
  if (!(config_.epsilon_explore >= 0.0 && config_.epsilon_explore <= 1.0)) {
    throw InvalidArgument("epsilon_explore must lie in [0, 1]");
  }
  theta_hat_.assign(history_.horizon(),
                    Vector::Zero(static_cast<Eigen::Index>(history_.features().dim())));
}

void BaselineAgent::plan_episode(Rng& rng) {
  (void)rng;
  mark_planned();
  const FeatureMap& f = history_.features();
  const std::size_t H = f.horizon();
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
  }
}

double BaselineAgent::q_value(std::size_t t, std::size_t s, std::size_t a) const {
  const FeatureMap& f = history_.features();
  const auto phi = f.phi(t, s, a);
  double q = phi.dot(theta_hat_[t]);
  if (config_.kind == BaselineKind::kUcb && config_.bonus_scale > 0.0) {
    q += config_.bonus_scale * history_.design(t).mahalanobis_norm(phi);
  }
  if (config_.clip_high) q = std::clamp(q, 0.0, static_cast<double>(f.horizon() - t));
  return q;
}

double BaselineAgent::explore_probability() const {
  return config_.kind == BaselineKind::kEpsilonGreedy ? config_.epsilon_explore : 0.0;
}

std::size_t BaselineAgent::act(std::size_t t, std::size_t s, Rng& rng) {
  require_planned("act");
  const double eps = explore_probability();
  if (eps > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < eps) {
      std::uniform_int_distribution<std::size_t> uniform(
          0, history_.features().num_actions() - 1);
      return uniform(rng);
    }
  }
  return greedy_action(t, s);
}

}  // namespace optrlsvi
