#include "optrlsvi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "optrlsvi/errors.hpp"

namespace optrlsvi {
namespace {

constexpr double kRowSumTolerance = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

template <typename Derived>
bool same_bits(const Eigen::DenseBase<Derived>& a,
               const Eigen::DenseBase<Derived>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.derived().array() == b.derived().array()).all();
}

template <typename T>
bool same_tables(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

// Dirichlet(1, ..., 1) draw: normalized unit exponentials.
Vector flat_dirichlet(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> exponential(1.0);
  Vector x(idx(n));
  for (auto& v : x) v = exponential(rng);
  return x / x.sum();
}

}  // namespace

FeatureMap::FeatureMap(std::size_t num_states, std::size_t num_actions,
                       std::size_t horizon, std::size_t dim)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      dim_(dim),
      table_(horizon, Matrix::Zero(idx(dim), idx(num_states * num_actions))) {
  if (num_states == 0 || num_actions == 0 || horizon == 0 || dim == 0) {
    throw InvalidArgument("feature map sizes S, A, H, d must all be positive");
  }
}

double FeatureMap::max_norm() const {
  double best = 0.0;
  for (const auto& m : table_) best = std::max(best, m.colwise().norm().maxCoeff());
  return best;
}

bool identical(const LowRankMdp& a, const LowRankMdp& b) {
  const FeatureMap& fa = a.features;
  const FeatureMap& fb = b.features;
  if (fa.num_states() != fb.num_states() || fa.num_actions() != fb.num_actions() ||
      fa.horizon() != fb.horizon() || fa.dim() != fb.dim() ||
      fa.l_phi != fb.l_phi) {
    return false;
  }
  for (std::size_t t = 0; t < fa.horizon(); ++t) {
    if (!same_bits(fa.timestep(t), fb.timestep(t))) return false;
  }
  return same_tables(a.psi, b.psi) && same_tables(a.theta_r, b.theta_r) &&
         same_tables(a.transition, b.transition) &&
         same_tables(a.reward, b.reward) &&
         same_bits(a.initial_distribution, b.initial_distribution) &&
         a.epsilon == b.epsilon && a.l_psi == b.l_psi && a.l_r == b.l_r;
}

LowRankMdp make_empty_mdp(std::size_t num_states, std::size_t num_actions,
                          std::size_t horizon, std::size_t dim) {
  LowRankMdp mdp;
  mdp.features = FeatureMap(num_states, num_actions, horizon, dim);
  const auto pairs = idx(num_states * num_actions);
  mdp.psi.assign(horizon, Matrix::Zero(idx(dim), idx(num_states)));
  mdp.theta_r.assign(horizon, Vector::Zero(idx(dim)));
  mdp.transition.assign(horizon, RowMajorMatrix::Zero(pairs, idx(num_states)));
  mdp.reward.assign(horizon, Vector::Zero(pairs));
  mdp.initial_distribution = Vector::Zero(idx(num_states));
  mdp.initial_distribution[0] = 1.0;
  return mdp;
}

void tighten_constants(LowRankMdp& mdp) {
  mdp.features.l_phi = mdp.features.max_norm();
  mdp.l_psi = 0.0;
  mdp.l_r = 0.0;
  for (std::size_t t = 0; t < mdp.horizon(); ++t) {
    mdp.l_psi = std::max(mdp.l_psi, mdp.psi[t].colwise().norm().sum());
    mdp.l_r = std::max(mdp.l_r, mdp.theta_r[t].norm());
  }
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kShape: return "shape";
    case ViolationKind::kNonFinite: return "non_finite";
    case ViolationKind::kNegativeProbability: return "negative_probability";
    case ViolationKind::kRowSum: return "row_sum";
    case ViolationKind::kRewardRange: return "reward_range";
    case ViolationKind::kRewardResidual: return "reward_residual";
    case ViolationKind::kTransitionResidual: return "transition_residual";
    case ViolationKind::kFeatureNorm: return "feature_norm";
    case ViolationKind::kPsiNorm: return "psi_norm";
    case ViolationKind::kThetaNorm: return "theta_norm";
    case ViolationKind::kInitialDistribution: return "initial_distribution";
  }
  return "unknown";
}

bool ValidationReport::solvable() const {
  return std::none_of(violations.begin(), violations.end(), [](const Violation& v) {
    switch (v.kind) {
      case ViolationKind::kShape:
      case ViolationKind::kNonFinite:
      case ViolationKind::kNegativeProbability:
      case ViolationKind::kRowSum:
      case ViolationKind::kRewardRange:
      case ViolationKind::kInitialDistribution:
        return true;
      default:
        return false;
    }
  });
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(),
                    [kind](const Violation& v) { return v.kind == kind; }));
}

std::string ValidationReport::describe() const {
  std::ostringstream out;
  out.precision(17);
  out << "violations " << violations.size() << "\n"
      << "reward_residual " << reward_residual << "\n"
      << "transition_residual " << transition_residual << "\n";
  for (const auto& v : violations) {
    out << to_string(v.kind) << " t=" << v.t << " s=" << v.s << " a=" << v.a
        << " magnitude=" << v.magnitude << "\n";
  }
  return out.str();
}

ValidationReport validate(const LowRankMdp& mdp) {
  ValidationReport report;
  auto add = [&report](ViolationKind kind, std::size_t t, std::size_t s,
                       std::size_t a, double magnitude) {
    report.violations.push_back({kind, t, s, a, magnitude});
  };

  const FeatureMap& f = mdp.features;
  const std::size_t S = f.num_states(), A = f.num_actions(), H = f.horizon(),
                    d = f.dim();
  const auto pairs = idx(S * A);
  bool shapes_ok = S > 0 && mdp.psi.size() == H && mdp.theta_r.size() == H &&
                   mdp.transition.size() == H && mdp.reward.size() == H &&
                   mdp.initial_distribution.size() == idx(S);
  for (std::size_t t = 0; shapes_ok && t < H; ++t) {
    shapes_ok = mdp.psi[t].rows() == idx(d) && mdp.psi[t].cols() == idx(S) &&
                mdp.theta_r[t].size() == idx(d) &&
                mdp.transition[t].rows() == pairs &&
                mdp.transition[t].cols() == idx(S) &&
                mdp.reward[t].size() == pairs;
  }
  if (!shapes_ok) {
    add(ViolationKind::kShape, 0, 0, 0, 0.0);
    return report;
  }

  const double tol = tolerance::kAccounting;
  for (std::size_t t = 0; t < H; ++t) {
    if (!f.timestep(t).allFinite() || !mdp.psi[t].allFinite() ||
        !mdp.theta_r[t].allFinite() || !mdp.transition[t].allFinite() ||
        !mdp.reward[t].allFinite()) {
      add(ViolationKind::kNonFinite, t, 0, 0, std::numeric_limits<double>::infinity());
      continue;
    }
    const Matrix predicted = mdp.psi[t].transpose() * f.timestep(t);  // S × pairs
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const auto p = idx(f.pair(s, a));
        const auto row = mdp.transition[t].row(p);
        const double min_entry = row.minCoeff();
        if (min_entry < 0.0) add(ViolationKind::kNegativeProbability, t, s, a, -min_entry);
        const double row_error = std::abs(row.sum() - 1.0);
        if (row_error > kRowSumTolerance) add(ViolationKind::kRowSum, t, s, a, row_error);

        const double r = mdp.reward[t][p];
        if (r < 0.0 || r > 1.0) {
          add(ViolationKind::kRewardRange, t, s, a, r < 0.0 ? -r : r - 1.0);
        }
        const auto phi = f.phi(t, s, a);
        const double reward_res = std::abs(r - phi.dot(mdp.theta_r[t]));
        const double transition_res =
            (row.transpose() - predicted.col(p)).cwiseAbs().sum();
        report.reward_residual = std::max(report.reward_residual, reward_res);
        report.transition_residual =
            std::max(report.transition_residual, transition_res);
        if (reward_res > mdp.epsilon + tol) {
          add(ViolationKind::kRewardResidual, t, s, a, reward_res);
        }
        if (transition_res > mdp.epsilon + tol) {
          add(ViolationKind::kTransitionResidual, t, s, a, transition_res);
        }
        const double norm = phi.norm();
        if (norm > f.l_phi + tol) add(ViolationKind::kFeatureNorm, t, s, a, norm);
      }
    }
    const double psi_sum = mdp.psi[t].colwise().norm().sum();
    if (psi_sum > mdp.l_psi + tol) add(ViolationKind::kPsiNorm, t, 0, 0, psi_sum);
    const double theta_norm = mdp.theta_r[t].norm();
    if (theta_norm > mdp.l_r + tol) add(ViolationKind::kThetaNorm, t, 0, 0, theta_norm);
  }

  const Vector& init = mdp.initial_distribution;
  if (!init.allFinite() || init.minCoeff() < 0.0 ||
      std::abs(init.sum() - 1.0) > kRowSumTolerance) {
    add(ViolationKind::kInitialDistribution, 0, 0, 0, std::abs(init.sum() - 1.0));
  }
  return report;
}

LowRankMdp generate_mixture_mdp(std::size_t num_states, std::size_t num_actions,
                                std::size_t horizon, std::size_t dim,
                                std::uint64_t seed) {
  if (num_states == 0 || num_actions == 0 || horizon == 0 || dim == 0) {
    throw InvalidArgument("mixture MDP needs positive S, A, H and d");
  }
  if (dim > num_states) {
    throw InvalidArgument("mixture MDP requires d <= S (got d=" +
                          std::to_string(dim) + ", S=" +
                          std::to_string(num_states) + ")");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LowRankMdp mdp = make_empty_mdp(num_states, num_actions, horizon, dim);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < dim; ++i) {
      mdp.psi[t].row(idx(i)) = flat_dirichlet(num_states, rng).transpose();
    }
    for (auto& v : mdp.theta_r[t]) v = unit(rng);
    for (std::size_t s = 0; s < num_states; ++s) {
      for (std::size_t a = 0; a < num_actions; ++a) {
        const Vector phi = flat_dirichlet(dim, rng);
        mdp.features.phi(t, s, a) = phi;
        const auto p = idx(mdp.features.pair(s, a));
        mdp.transition[t].row(p) = (mdp.psi[t].transpose() * phi).transpose();
        mdp.reward[t][p] = phi.dot(mdp.theta_r[t]);
      }
    }
  }
  tighten_constants(mdp);
  return mdp;
}

std::vector<std::size_t> hard_chain_solution(std::size_t chain_length,
                                             std::uint64_t seed,
                                             std::size_t num_actions) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, num_actions - 1);
  std::vector<std::size_t> correct(chain_length);
  for (auto& a : correct) a = pick(rng);
  return correct;
}

LowRankMdp generate_hard_chain(std::size_t chain_length, std::size_t horizon,
                               std::uint64_t seed, std::size_t num_actions) {
  if (chain_length < 2) throw InvalidArgument("chain length N must be at least 2");
  if (horizon < chain_length) {
    throw InvalidArgument("hard chain requires H >= N (got H=" +
                          std::to_string(horizon) + ", N=" +
                          std::to_string(chain_length) + ")");
  }
  if (num_actions == 0) throw InvalidArgument("hard chain needs at least one action");

  const std::size_t S = chain_length + 1;
  const std::size_t d = S * num_actions;
  const auto correct = hard_chain_solution(chain_length, seed, num_actions);
  LowRankMdp mdp = make_empty_mdp(S, num_actions, horizon, d);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < num_actions; ++a) {
        const std::size_t pair = mdp.features.pair(s, a);
        const auto p = idx(pair);
        mdp.features.phi(t, s, a)[p] = 1.0;
        std::size_t next = 0;
        double r = 0.0;
        if (s == chain_length) {
          next = chain_length;
          r = 1.0;
        } else if (a == correct[s]) {
          next = s + 1;
          r = next == chain_length ? 1.0 : 0.0;
        }
        mdp.transition[t](p, idx(next)) = 1.0;
        mdp.psi[t](p, idx(next)) = 1.0;
        mdp.reward[t][p] = r;
        mdp.theta_r[t][p] = r;
      }
    }
  }
  tighten_constants(mdp);
  return mdp;
}

LowRankMdp perturb_transitions(const LowRankMdp& mdp, double magnitude,
                               std::uint64_t seed) {
  if (!(magnitude >= 0.0)) throw InvalidArgument("perturbation magnitude must be >= 0");
  LowRankMdp out = mdp;
  Rng rng(seed);
  std::uniform_real_distribution<double> noise(0.0, magnitude);
  for (auto& table : out.transition) {
    for (Eigen::Index p = 0; p < table.rows(); ++p) {
      if (magnitude > 0.0) {
        for (Eigen::Index j = 0; j < table.cols(); ++j) table(p, j) += noise(rng);
      }
      table.row(p) /= table.row(p).sum();
    }
  }
  out.epsilon = 0.0;
  const ValidationReport report = validate(out);
  out.epsilon = std::max(report.reward_residual, report.transition_residual);
  return out;
}

namespace {

void require_solvable(const LowRankMdp& mdp) {
  const ValidationReport report = validate(mdp);
  if (!report.solvable()) {
    throw PreconditionViolation("MDP is not a valid tabular model:\n" +
                                report.describe());
  }
}

ValueTables allocate_values(const LowRankMdp& mdp) {
  const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  ValueTables values;
  values.q.assign(H, Matrix::Zero(idx(S), idx(A)));
  values.v.assign(H, Vector::Zero(idx(S)));
  return values;
}

// Q_t(s,a) = r_t(s,a) + ℙ_t(·|s,a)ᵀ V_{t+1}.
void backup(const LowRankMdp& mdp, std::size_t t, const Vector& next_value,
            Matrix& q) {
  const Vector expected = mdp.transition[t] * next_value;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto p = idx(mdp.features.pair(s, a));
      q(idx(s), idx(a)) = mdp.reward[t][p] + expected[p];
    }
  }
}

}  // namespace

ValueTables compute_optimal(const LowRankMdp& mdp, Check check) {
  if (check == Check::kValidate) require_solvable(mdp);
  const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  ValueTables values = allocate_values(mdp);
  values.greedy_policy.assign(H, std::vector<std::size_t>(S, 0));
  Vector next = Vector::Zero(idx(S));
  for (std::size_t t = H; t-- > 0;) {
    backup(mdp, t, next, values.q[t]);
    for (std::size_t s = 0; s < S; ++s) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < A; ++a) {
        if (values.q[t](idx(s), idx(a)) > values.q[t](idx(s), idx(best))) best = a;
      }
      values.greedy_policy[t][s] = best;
      values.v[t][idx(s)] = values.q[t](idx(s), idx(best));
    }
    next = values.v[t];
  }
  return values;
}

ValueTables evaluate_policy(const LowRankMdp& mdp, const Policy& policy,
                            Check check) {
  if (check == Check::kValidate) require_solvable(mdp);
  const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  if (policy.size() != H) throw InvalidArgument("policy must cover every timestep");
  for (const auto& rule : policy) {
    if (rule.size() != S) throw InvalidArgument("policy must cover every state");
    for (std::size_t a : rule) {
      if (a >= A) {
        throw InvalidArgument("policy action " + std::to_string(a) +
                              " out of range [0, " + std::to_string(A) + ")");
      }
    }
  }
  ValueTables values = allocate_values(mdp);
  values.greedy_policy = policy;
  Vector next = Vector::Zero(idx(S));
  for (std::size_t t = H; t-- > 0;) {
    backup(mdp, t, next, values.q[t]);
    for (std::size_t s = 0; s < S; ++s) {
      values.v[t][idx(s)] = values.q[t](idx(s), idx(policy[t][s]));
    }
    next = values.v[t];
  }
  return values;
}

ValueTables evaluate_policy(const LowRankMdp& mdp, const StochasticPolicy& policy,
                            Check check) {
  if (check == Check::kValidate) require_solvable(mdp);
  const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  if (policy.size() != H) throw InvalidArgument("policy must cover every timestep");
  for (const auto& probs : policy) {
    if (probs.rows() != idx(S) || probs.cols() != idx(A)) {
      throw InvalidArgument("stochastic policy table must be S x A");
    }
    if (!probs.allFinite() || probs.minCoeff() < 0.0 ||
        ((probs.rowwise().sum().array() - 1.0).abs() > 1e-9).any()) {
      throw InvalidArgument("stochastic policy rows must be distributions");
    }
  }
  ValueTables values = allocate_values(mdp);
  Vector next = Vector::Zero(idx(S));
  for (std::size_t t = H; t-- > 0;) {
    backup(mdp, t, next, values.q[t]);
    values.v[t] = values.q[t].cwiseProduct(policy[t]).rowwise().sum();
    next = values.v[t];
  }
  return values;
}

double initial_value(const LowRankMdp& mdp, const ValueTables& values) {
  return mdp.initial_distribution.dot(values.v.front());
}

namespace {

template <typename Row>
std::size_t inverse_cdf(const Row& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    cumulative += probs[j];
    last_positive = static_cast<std::size_t>(j);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

}  // namespace

Transition step(const LowRankMdp& mdp, std::size_t t, std::size_t s,
                std::size_t a, Rng& rng) {
  if (t >= mdp.horizon() || s >= mdp.num_states() || a >= mdp.num_actions()) {
    throw InvalidArgument("step index out of range (t=" + std::to_string(t) +
                          ", s=" + std::to_string(s) + ", a=" +
                          std::to_string(a) + ")");
  }
  const std::size_t next = inverse_cdf(mdp.row(t, s, a), rng);
  return {next, mdp.r(t, s, a)};
}

std::size_t sample_initial_state(const LowRankMdp& mdp, Rng& rng) {
  return inverse_cdf(mdp.initial_distribution, rng);
}

Matrix policy_transition_matrix(const LowRankMdp& mdp, std::size_t t,
                                const Policy& policy) {
  const std::size_t S = mdp.num_states();
  Matrix p(idx(S), idx(S));
  for (std::size_t s = 0; s < S; ++s) p.row(idx(s)) = mdp.row(t, s, policy[t][s]);
  return p;
}

}  // namespace optrlsvi
