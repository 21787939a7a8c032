#include "optrlsvi/agent.hpp"

#include "optrlsvi/errors.hpp"

namespace optrlsvi {

LsviHistory::LsviHistory(FeatureMap features, double lambda,
                         std::size_t recompute_period)
    : features_(std::move(features)), lambda_(lambda) {
  designs_.reserve(features_.horizon());
  for (std::size_t t = 0; t < features_.horizon(); ++t) {
    designs_.emplace_back(features_.dim(), lambda, recompute_period);
  }
  replay_.resize(features_.horizon());
}

void LsviHistory::record(std::size_t t, std::size_t s, std::size_t a, double r,
                         std::size_t next_state) {
  if (t != next_timestep_) {
    throw ProtocolViolation("observe at t=" + std::to_string(t) +
                            " but the episode expects t=" +
                            std::to_string(next_timestep_));
  }
  if (s >= features_.num_states() || a >= features_.num_actions() ||
      next_state >= features_.num_states()) {
    throw InvalidArgument("observed state or action out of range");
  }
  Vector phi = features_.phi(t, s, a);
  designs_[t].rank_one_update(phi);
  replay_[t].push_back({s, a, r, next_state, std::move(phi)});
  if (++next_timestep_ == features_.horizon()) {
    next_timestep_ = 0;
    ++completed_episodes_;
  }
}

Vector LsviHistory::ridge_solve(std::size_t t, const std::vector<double>& targets) const {
  const auto& entries = replay_[t];
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(features_.dim()));
  for (std::size_t i = 0; i < entries.size(); ++i) rhs += targets[i] * entries[i].phi;
  return designs_[t].solve(rhs);
}

std::size_t LsviHistory::memory_bytes() const {
  std::size_t bytes = sizeof(*this);
  for (const auto& d : designs_) bytes += d.memory_bytes();
  for (const auto& entries : replay_) {
    bytes += entries.capacity() * sizeof(ReplayEntry);
    for (const auto& e : entries) bytes += static_cast<std::size_t>(e.phi.size()) * sizeof(double);
  }
  return bytes;
}

std::size_t Agent::act(std::size_t t, std::size_t s, Rng& rng) {
  (void)rng;
  require_planned("act");
  return greedy_action(t, s);
}

void Agent::observe(std::size_t t, std::size_t s, std::size_t a, double r,
                    std::size_t next_state) {
  require_planned("observe");
  LsviHistory& h = mutable_history();
  h.record(t, s, a, r, next_state);
  if (!h.mid_episode()) planned_ = false;
}

double Agent::value(std::size_t t, std::size_t s) const {
  if (t >= history().horizon()) return 0.0;
  return q_value(t, s, greedy_action(t, s));
}

std::size_t Agent::greedy_action(std::size_t t, std::size_t s) const {
  const std::size_t A = history().features().num_actions();
  std::size_t best = 0;
  double best_q = q_value(t, s, 0);
  for (std::size_t a = 1; a < A; ++a) {
    const double q = q_value(t, s, a);
    if (q > best_q) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

StochasticPolicy Agent::executed_policy() const {
  const FeatureMap& f = history().features();
  const auto S = static_cast<Eigen::Index>(f.num_states());
  const auto A = static_cast<Eigen::Index>(f.num_actions());
  const double eps = explore_probability();
  StochasticPolicy policy(f.horizon(), Matrix::Constant(S, A, eps / static_cast<double>(A)));
  for (std::size_t t = 0; t < f.horizon(); ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      policy[t](s, static_cast<Eigen::Index>(greedy_action(t, static_cast<std::size_t>(s)))) +=
          1.0 - eps;
    }
  }
  return policy;
}

void Agent::mark_planned() {
  if (history().mid_episode()) {
    throw ProtocolViolation("cannot replan in the middle of an episode");
  }
  planned_ = true;
}

void Agent::require_planned(const char* operation) const {
  if (!planned_) {
    throw ProtocolViolation(std::string(operation) +
                            " called before plan_episode for this episode");
  }
}

}  // namespace optrlsvi
