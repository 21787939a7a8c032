#include "optrlsvi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "optrlsvi/errors.hpp"
#include "optrlsvi/serialization.hpp"

namespace optrlsvi {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Rng derived_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

enum Stream : std::uint32_t { kEnvironment = 0, kAgent = 1, kResample = 2 };

void check_compatible(const LowRankMdp& mdp, const Agent& agent) {
  const FeatureMap& f = agent.history().features();
  if (f.num_states() != mdp.num_states() || f.num_actions() != mdp.num_actions() ||
      f.horizon() != mdp.horizon() || f.dim() != mdp.dim()) {
    throw InvalidArgument("agent dimensions (S, A, H, d) do not match the MDP");
  }
  if (agent.history().mid_episode()) {
    throw InvalidArgument("agent is in the middle of an episode");
  }
}

}  // namespace

double EpisodeRecord::max_eta_norm() const {
  if (eta_norms.empty()) return kNaN;
  return *std::max_element(eta_norms.begin(), eta_norms.end());
}

bool optimism_indicator(const Agent& agent, const ValueTables& optimal,
                        std::size_t start_state) {
  return agent.value(0, start_state) >=
         optimal.v.front()[static_cast<Eigen::Index>(start_state)];
}

double eta_diagnostic(const Agent& agent, const LowRankMdp& mdp, std::size_t t) {
  const LsviHistory& h = agent.history();
  const auto& entries = h.replay(t);
  if (entries.empty() || t + 1 >= mdp.horizon()) return 0.0;

  const std::size_t S = mdp.num_states();
  Vector next_value(static_cast<Eigen::Index>(S));
  for (std::size_t s = 0; s < S; ++s) next_value[static_cast<Eigen::Index>(s)] = agent.value(t + 1, s);

  std::vector<double> expected(S * mdp.num_actions(), kNaN);
  std::vector<double> weights(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ReplayEntry& e = entries[i];
    double& ev = expected[mdp.features.pair(e.state, e.action)];
    if (std::isnan(ev)) ev = mdp.row(t, e.state, e.action).dot(next_value.transpose());
    weights[i] = next_value[static_cast<Eigen::Index>(e.next_state)] - ev;
  }
  const Vector eta = h.ridge_solve(t, weights);
  return h.design(t).mahalanobis_norm(eta, NormKind::kForward);
}

double loglog_slope(const std::vector<double>& cumulative_regret) {
  const std::size_t n = cumulative_regret.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = n / 2; i < n; ++i) {
    const double c = cumulative_regret[i];
    if (!(c > 0.0)) continue;
    const double x = std::log(static_cast<double>(i + 1));
    const double y = std::log(c);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return kNaN;
  const double mm = static_cast<double>(m);
  const double denom = mm * sxx - sx * sx;
  if (denom <= 0.0) return kNaN;
  return (mm * sxy - sx * sy) / denom;
}

double feature_sum_bound(std::size_t dim, double lambda, std::size_t episodes,
                         double l_phi) {
  return 2.0 * static_cast<double>(dim) *
         std::log((lambda + static_cast<double>(episodes) * l_phi * l_phi) / lambda);
}

double warmup_bound(std::size_t horizon, std::size_t dim, double lambda,
                    std::size_t episodes, double l_phi, double alpha_lower) {
  const double scale = std::max(1.0, 1.0 / (alpha_lower * alpha_lower));
  return static_cast<double>(horizon) * scale *
         feature_sum_bound(dim, lambda, episodes, l_phi);
}

RunResult run(const LowRankMdp& mdp, Agent& agent, const RunOptions& options) {
  check_compatible(mdp, agent);
  const ValidationReport report = validate(mdp);
  if (!report.solvable()) {
    throw PreconditionViolation("MDP is not a valid tabular model:\n" + report.describe());
  }
  const ValueTables optimal = compute_optimal(mdp, Check::kAssumeValid);
  const std::size_t H = mdp.horizon();
  const double relaxed_margin = 4.0 * static_cast<double>(H * H) * mdp.epsilon;

  Rng env_rng = derived_stream(options.seed, kEnvironment);
  Rng agent_rng = derived_stream(options.seed, kAgent);
  Rng resample_rng = derived_stream(options.seed, kResample);

  RunResult result;
  RunSummary& summary = result.summary;
  summary.seed = options.seed;
  summary.config_digest = options.config_digest;
  summary.running_feature_sum.assign(H, 0.0);
  summary.min_alpha_lower = kNaN;
  result.episodes.reserve(options.episodes);

  double cumulative = 0.0;
  std::size_t optimistic_count = 0, relaxed_count = 0;
  std::size_t xi_checks = 0, xi_good = 0;
  double resampled_sum = 0.0;
  std::size_t resampled_episodes = 0;

  for (std::size_t k = 1; k <= options.episodes; ++k) {
    EpisodeRecord rec;
    rec.k = k;
    rec.start_state = sample_initial_state(mdp, env_rng);
    const double v_star = optimal.v.front()[static_cast<Eigen::Index>(rec.start_state)];
    rec.optimal_value = v_star;

    rec.resampled_optimism = kNaN;
    if (options.optimism_resamples > 0 && k >= options.resample_from_episode) {
      std::size_t hits = 0;
      for (std::size_t m = 0; m < options.optimism_resamples; ++m) {
        agent.plan_episode(resample_rng);
        if (optimism_indicator(agent, optimal, rec.start_state)) ++hits;
      }
      rec.resamples = options.optimism_resamples;
      rec.resampled_optimism =
          static_cast<double>(hits) / static_cast<double>(options.optimism_resamples);
      resampled_sum += rec.resampled_optimism;
      ++resampled_episodes;
    }

    agent.plan_episode(agent_rng);
    const auto cut = agent.cutoffs();
    rec.sigma = cut ? cut->sigma : kNaN;
    rec.alpha_lower = cut ? cut->alpha_lower : kNaN;
    rec.alpha_upper = cut ? cut->alpha_upper : kNaN;
    rec.sqrt_beta = cut ? cut->sqrt_beta : kNaN;
    rec.xi_radius = cut ? cut->xi_radius : kNaN;
    if (cut) {
      summary.min_alpha_lower = std::isnan(summary.min_alpha_lower)
                                    ? cut->alpha_lower
                                    : std::min(summary.min_alpha_lower, cut->alpha_lower);
    }

    if (options.diagnostics) {
      for (std::size_t t = 0; t < H; ++t) {
        rec.eta_norms.push_back(eta_diagnostic(agent, mdp, t));
        if (auto xi = agent.pseudonoise(t)) {
          const double norm = agent.history().design(t).mahalanobis_norm(*xi, NormKind::kForward);
          rec.xi_norms.push_back(norm);
          const bool good = norm <= rec.xi_radius;
          rec.good_event_xi.push_back(good);
          ++xi_checks;
          if (good) ++xi_good;
        }
      }
    }

    rec.planned_value = agent.value(0, rec.start_state);
    rec.optimistic = rec.planned_value >= v_star;
    rec.optimistic_relaxed = rec.planned_value - v_star >= -relaxed_margin;
    optimistic_count += rec.optimistic ? 1 : 0;
    relaxed_count += rec.optimistic_relaxed ? 1 : 0;

    const ValueTables executed =
        evaluate_policy(mdp, agent.executed_policy(), Check::kAssumeValid);
    rec.policy_value = executed.v.front()[static_cast<Eigen::Index>(rec.start_state)];
    rec.per_episode_regret = v_star - rec.policy_value;

    std::size_t s = rec.start_state;
    rec.trajectory.reserve(H);
    rec.feature_norms.reserve(H);
    for (std::size_t t = 0; t < H; ++t) {
      const std::size_t a = agent.act(t, s, agent_rng);
      const double norm = agent.history().design(t).mahalanobis_norm(mdp.features.phi(t, s, a));
      rec.feature_norms.push_back(norm);
      summary.running_feature_sum[t] += std::min(1.0, norm * norm);
      if (cut && norm > cut->alpha_lower) ++rec.default_steps;
      const Transition tr = step(mdp, t, s, a, env_rng);
      agent.observe(t, s, a, tr.reward, tr.next_state);
      rec.trajectory.push_back({t, s, a, tr.reward, tr.next_state});
      s = tr.next_state;
    }

    cumulative += rec.per_episode_regret;
    summary.cumulative_regret.push_back(cumulative);
    summary.warmup_total += rec.default_steps;
    result.episodes.push_back(std::move(rec));
  }

  const double n = static_cast<double>(std::max<std::size_t>(1, options.episodes));
  summary.optimism_rate = static_cast<double>(optimistic_count) / n;
  summary.optimism_rate_relaxed = static_cast<double>(relaxed_count) / n;
  summary.resampled_optimism_rate =
      resampled_episodes > 0 ? resampled_sum / static_cast<double>(resampled_episodes) : kNaN;
  summary.good_event_xi_rate =
      xi_checks > 0 ? static_cast<double>(xi_good) / static_cast<double>(xi_checks) : kNaN;
  summary.loglog_slope = loglog_slope(summary.cumulative_regret);
  return result;
}

MeanStderr mean_stderr(const std::vector<double>& samples) {
  MeanStderr out;
  if (samples.empty()) return {kNaN, kNaN};
  const double n = static_cast<double>(samples.size());
  for (double x : samples) out.mean += x;
  out.mean /= n;
  if (samples.size() < 2) return out;
  double ss = 0.0;
  for (double x : samples) ss += (x - out.mean) * (x - out.mean);
  out.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

SweepRow aggregate(const std::string& label, const std::string& config_digest,
                   const std::vector<RunSummary>& runs) {
  SweepRow row;
  row.label = label;
  row.config_digest = config_digest;
  row.num_seeds = runs.size();
  std::vector<double> regret, optimism, warmup;
  std::size_t length = runs.empty() ? 0 : runs.front().cumulative_regret.size();
  for (const auto& r : runs) {
    regret.push_back(r.final_regret());
    optimism.push_back(r.optimism_rate);
    warmup.push_back(static_cast<double>(r.warmup_total));
    length = std::min(length, r.cumulative_regret.size());
  }
  row.final_regret = mean_stderr(regret);
  row.optimism_rate = mean_stderr(optimism);
  row.warmup_total = mean_stderr(warmup);
  row.mean_cumulative_regret.assign(length, 0.0);
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < length; ++i) {
      row.mean_cumulative_regret[i] += r.cumulative_regret[i] / static_cast<double>(runs.size());
    }
  }
  row.mean_curve_slope = loglog_slope(row.mean_cumulative_regret);
  return row;
}

std::vector<SweepRow> sweep(const std::vector<SweepJob>& jobs, const SweepOptions& options) {
  if (jobs.empty()) throw InvalidArgument("sweep needs at least one configuration");
  if (options.num_seeds == 0) throw InvalidArgument("sweep needs at least one seed");

  const std::size_t total = jobs.size() * options.num_seeds;
  std::vector<RunSummary> summaries(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next++; i < total; i = next++) {
      const SweepJob& job = jobs[i / options.num_seeds];
      const std::uint64_t seed = options.base_seed + i % options.num_seeds;
      try {
        RunOptions opts = job.options;
        opts.seed = seed;
        opts.config_digest = job.config_digest;
        auto agent = job.make_agent(*job.mdp);
        RunResult result = run(*job.mdp, *agent, opts);
        if (options.on_run) options.on_run(job, seed, result);
        summaries[i] = std::move(result.summary);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::size_t threads = options.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, total);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<SweepRow> rows;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    std::vector<RunSummary> runs(summaries.begin() + static_cast<std::ptrdiff_t>(j * options.num_seeds),
                                 summaries.begin() + static_cast<std::ptrdiff_t>((j + 1) * options.num_seeds));
    rows.push_back(aggregate(jobs[j].label, jobs[j].config_digest, runs));
  }
  return rows;
}

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  return format_double(x);
}

}  // namespace

void write_run_csv(std::ostream& out, const RunResult& result, std::string_view version) {
  out << "# " << kRunCsvSchema << " version=" << version
      << " config_digest=" << result.summary.config_digest
      << " seed=" << result.summary.seed << '\n'
      << "k,per_episode_regret,cumulative_regret,optimistic,default_steps,"
         "max_eta_norm,sigma_k,alpha_L,alpha_U\n";
  for (std::size_t i = 0; i < result.episodes.size(); ++i) {
    const EpisodeRecord& e = result.episodes[i];
    out << e.k << ',' << num(e.per_episode_regret) << ','
        << num(result.summary.cumulative_regret[i]) << ',' << (e.optimistic ? 1 : 0) << ','
        << e.default_steps << ',' << num(e.max_eta_norm()) << ',' << num(e.sigma) << ','
        << num(e.alpha_lower) << ',' << num(e.alpha_upper) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const RunSummary& s, std::string_view version) {
  out << "# " << kSummaryCsvSchema << " version=" << version
      << " config_digest=" << s.config_digest << '\n'
      << "seed,episodes,final_cumulative_regret,optimism_rate,optimism_rate_relaxed,"
         "resampled_optimism_rate,warmup_total,loglog_slope,good_event_xi_rate,"
         "min_alpha_L\n"
      << s.seed << ',' << s.cumulative_regret.size() << ',' << num(s.final_regret()) << ','
      << num(s.optimism_rate) << ',' << num(s.optimism_rate_relaxed) << ','
      << num(s.resampled_optimism_rate) << ',' << s.warmup_total << ','
      << num(s.loglog_slope) << ',' << num(s.good_event_xi_rate) << ','
      << num(s.min_alpha_lower) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     std::string_view version, std::string_view sweep_digest) {
  out << "# " << kSweepCsvSchema << " version=" << version
      << " config_digest=" << sweep_digest << '\n'
      << "label,config_digest,num_seeds,mean_final_regret,stderr_final_regret,"
         "mean_optimism_rate,stderr_optimism_rate,mean_warmup_total,"
         "stderr_warmup_total,mean_curve_loglog_slope\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.config_digest << ',' << r.num_seeds << ','
        << num(r.final_regret.mean) << ',' << num(r.final_regret.sem) << ','
        << num(r.optimism_rate.mean) << ',' << num(r.optimism_rate.sem) << ','
        << num(r.warmup_total.mean) << ',' << num(r.warmup_total.sem) << ','
        << num(r.mean_curve_slope) << '\n';
  }
}

}  // namespace optrlsvi
