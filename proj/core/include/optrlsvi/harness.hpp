#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "optrlsvi/agent.hpp"
#include "optrlsvi/mdp.hpp"

namespace optrlsvi {

struct StepRecord {
  std::size_t t;
  std::size_t s;
  std::size_t a;
  double r;
  std::size_t next_state;
};

struct EpisodeRecord {
  std::size_t k = 0;
  std::size_t start_state = 0;
  std::vector<StepRecord> trajectory;
  double optimal_value = 0.0;   // V⋆_1(s_1k)
  double policy_value = 0.0;    // V^{π_k}_1(s_1k)
  double planned_value = 0.0;   // V̄_1k(s_1k)
  double per_episode_regret = 0.0;
  bool optimistic = false;           // V̄ ≥ V⋆
  bool optimistic_relaxed = false;   // V̄ - V⋆ ≥ -4H²ε
  // Fraction of i.i.d. replans at this history that were optimistic; NaN
  // when not measured.
  double resampled_optimism = 0.0;
  std::size_t resamples = 0;
  // ‖φ_tk‖_{Σ_tk⁻¹} of the executed steps, one per t.
  std::vector<double> feature_norms;
  std::size_t default_steps = 0;
  // ‖η̄_tk‖_{Σ_tk} and ‖ξ_tk‖_{Σ_tk}, one per t (empty without diagnostics).
  std::vector<double> eta_norms;
  std::vector<double> xi_norms;
  std::vector<bool> good_event_xi;
  // NaN for agents without cutoffs.
  double sigma = 0.0;
  double alpha_lower = 0.0;
  double alpha_upper = 0.0;
  double sqrt_beta = 0.0;
  double xi_radius = 0.0;

  double max_eta_norm() const;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<double> cumulative_regret;
  double optimism_rate = 0.0;
  double optimism_rate_relaxed = 0.0;
  // Mean of the per-episode resampled optimism over measured episodes.
  double resampled_optimism_rate = 0.0;
  std::size_t warmup_total = 0;
  double loglog_slope = 0.0;
  double min_alpha_lower = 0.0;
  double good_event_xi_rate = 0.0;
  // Σ_k min{1, ‖φ_tk‖²_{Σ_tk⁻¹}} for each t.
  std::vector<double> running_feature_sum;

  double final_regret() const {
    return cumulative_regret.empty() ? 0.0 : cumulative_regret.back();
  }
};

struct RunResult {
  std::vector<EpisodeRecord> episodes;
  RunSummary summary;
};

struct RunOptions {
  std::size_t episodes = 100;
  std::uint64_t seed = 0;
  // M i.i.d. replans per episode for the resampled optimism frequency.
  std::size_t optimism_resamples = 0;
  std::size_t resample_from_episode = 1;
  // η and ξ norm diagnostics; costs one extra pass over the replay per t.
  bool diagnostics = true;
  std::string config_digest;
};

/// Plays options.episodes episodes and scores every executed decision rule
/// exactly against the DP oracle. Deterministic given options.seed.
RunResult run(const LowRankMdp& mdp, Agent& agent, const RunOptions& options);

/// V̄_1k(s_1) ≥ V⋆_1(s_1) for the agent's current plan.
bool optimism_indicator(const Agent& agent, const ValueTables& optimal,
                        std::size_t start_state);

/// ‖η̄_tk‖_{Σ_tk} with η̄_tk = Σ_tk⁻¹ Σ_i φ_ti (V̄_{t+1}(s'_i) - E[V̄_{t+1}(s') | s_ti, a_ti]),
/// the expectation taken exactly over the tabular transition row.
double eta_diagnostic(const Agent& agent, const LowRankMdp& mdp, std::size_t t);

/// OLS slope of log cumulative regret against log k over the second half of
/// the episodes; NaN when fewer than two positive points remain.
double loglog_slope(const std::vector<double>& cumulative_regret);

/// Counting bound Σ_{k,t} 1{‖φ_tk‖ > α_L} ≤ H·max(1, 1/α_L²)·2d·log((λ+K L_φ²)/λ).
double warmup_bound(std::size_t horizon, std::size_t dim, double lambda,
                    std::size_t episodes, double l_phi, double alpha_lower);

/// Per-t bound Σ_k min{1, ‖φ_tk‖²_{Σ_tk⁻¹}} ≤ 2d·log((λ + K L_φ²)/λ).
double feature_sum_bound(std::size_t dim, double lambda, std::size_t episodes,
                         double l_phi);

struct MeanStderr {
  double mean = 0.0;
  double sem = 0.0;  // standard error of the mean
};

/// Sample mean and standard error (n-1 denominator; zero error for n = 1).
MeanStderr mean_stderr(const std::vector<double>& samples);

using AgentFactory = std::function<std::unique_ptr<Agent>(const LowRankMdp&)>;

struct SweepJob {
  std::string label;
  std::string config_digest;
  std::shared_ptr<const LowRankMdp> mdp;
  AgentFactory make_agent;
  RunOptions options;   // seed is replaced per replicate
};

struct SweepRow {
  std::string label;
  std::string config_digest;
  std::size_t num_seeds = 0;
  MeanStderr final_regret;
  MeanStderr optimism_rate;
  MeanStderr warmup_total;
  std::vector<double> mean_cumulative_regret;
  double mean_curve_slope = 0.0;
};

SweepRow aggregate(const std::string& label, const std::string& config_digest,
                   const std::vector<RunSummary>& runs);

struct SweepOptions {
  std::size_t num_seeds = 1;
  std::uint64_t base_seed = 0;
  // 0 selects std::thread::hardware_concurrency().
  std::size_t threads = 0;
  // Called from worker threads once per finished run.
  std::function<void(const SweepJob&, std::uint64_t seed, const RunResult&)> on_run;
};

/// Runs every job for seeds base_seed .. base_seed + num_seeds - 1. Runs are
/// independent and rows come back in job order regardless of scheduling.
std::vector<SweepRow> sweep(const std::vector<SweepJob>& jobs, const SweepOptions& options);

inline constexpr std::string_view kRunCsvSchema = "optrlsvi-run-csv v1";
inline constexpr std::string_view kSummaryCsvSchema = "optrlsvi-summary-csv v1";
inline constexpr std::string_view kSweepCsvSchema = "optrlsvi-sweep-csv v1";

void write_run_csv(std::ostream& out, const RunResult& result, std::string_view version);
void write_summary_csv(std::ostream& out, const RunSummary& summary,
                       std::string_view version);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     std::string_view version, std::string_view sweep_digest);

}  // namespace optrlsvi
