#pragma once

// Run and sweep configuration files: INI-style `key = value` sections
// ([mdp], [agent], [run], and for sweeps [sweep] plus [grid]).

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "optrlsvi/agent.hpp"
#include "optrlsvi/agent_baselines.hpp"
#include "optrlsvi/agent_rlsvi.hpp"
#include "optrlsvi/mdp.hpp"

namespace optrlsvi::cli {

struct MdpSource {
  std::string kind = "mixture";   // mixture | chain | file
  std::size_t num_states = 10;
  std::size_t num_actions = 3;
  std::size_t horizon = 5;
  std::size_t dim = 3;
  std::size_t chain_length = 5;
  std::uint64_t seed = 1;
  double perturb = 0.0;           // misspecification knob
  std::filesystem::path path;     // kind = file
};

struct AgentSpec {
  std::string kind = "opt_rlsvi";  // opt_rlsvi | ucb | greedy | epsilon_greedy
  RlsviConfig rlsvi;
  BaselineConfig baseline;
};

struct RunConfig {
  MdpSource mdp;
  AgentSpec agent;
  std::size_t episodes = 100;
  std::uint64_t seed = 0;
  std::size_t optimism_resamples = 0;
  std::size_t resample_from = 1;
  bool diagnostics = true;
  std::filesystem::path output_dir;  // empty: derive from the environment
};

/// Effective settings as sorted `section.key = value` lines; the output
/// directory is excluded so relocated reruns share a digest.
std::string canonical_text(const RunConfig& config, bool include_seed = true);
/// 16 hex digits of FNV-1a over the text.
std::string digest(const std::string& text);

RunConfig parse_run_config(const boost::property_tree::ptree& tree);
/// Relative MDP paths resolve against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

struct SweepConfig {
  boost::property_tree::ptree base;
  std::filesystem::path base_dir;
  std::size_t num_seeds = 1;
  std::uint64_t base_seed = 0;
  // Ordered "section.key" -> candidate values; the grid is their product.
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  std::filesystem::path output_dir;
};

struct SweepCell {
  std::string label;   // "agent.practical_scale=0.05;..." or "base"
  RunConfig config;
};

SweepConfig load_sweep_config(const std::filesystem::path& path);
std::vector<SweepCell> expand_grid(const SweepConfig& sweep);

LowRankMdp build_mdp(const MdpSource& source);
std::unique_ptr<Agent> build_agent(const AgentSpec& spec, const LowRankMdp& mdp,
                                   std::size_t planned_episodes);

/// $OPTRLSVI_OUTPUT_ROOT, else "results".
std::filesystem::path default_output_root();

}  // namespace optrlsvi::cli
