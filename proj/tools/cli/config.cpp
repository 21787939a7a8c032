#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "optrlsvi/errors.hpp"
#include "optrlsvi/serialization.hpp"

namespace optrlsvi::cli {
namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"mdp", {"kind", "S", "A", "H", "d", "N", "seed", "perturb", "path"}},
      {"agent",
       {"kind", "lambda", "delta", "c1", "c2", "practical_scale", "planned_episodes",
        "freeze_cutoffs", "recompute_period", "bonus_scale", "epsilon_explore",
        "clip_high"}},
      {"run",
       {"episodes", "seed", "optimism_resamples", "resample_from", "diagnostics",
        "output"}},
  };
  return keys;
}

void check_keys(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      throw InvalidConfiguration("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      (void)value;
      if (!it->second.contains(key)) {
        throw InvalidConfiguration("unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
}

template <typename T>
T get(const pt::ptree& tree, const std::string& path, T fallback) {
  const auto node = tree.get_child_optional(path);
  if (!node) return fallback;
  const std::string text = node->data();
  if constexpr (std::is_same_v<T, double>) {
    try {
      return parse_double(text);
    } catch (const ParseError&) {
      throw InvalidConfiguration("'" + path + "' expects a real number, got '" + text + "'");
    }
  } else {
    const auto value = node->get_value_optional<T>();
    if (!value) throw InvalidConfiguration("'" + path + "' has an invalid value '" + text + "'");
    return *value;
  }
}

std::string fmt(double x) { return format_double(x); }

pt::ptree read_ini(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw InvalidConfiguration("config file not found: " + path.string());
  }
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidConfiguration(std::string("cannot parse config: ") + e.what());
  }
  return tree;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) continue;
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

void resolve_paths(RunConfig& config, const std::filesystem::path& base_dir) {
  if (config.mdp.kind == "file" && config.mdp.path.is_relative()) {
    config.mdp.path = base_dir / config.mdp.path;
  }
  if (config.mdp.kind == "file" && !std::filesystem::exists(config.mdp.path)) {
    throw InvalidConfiguration("MDP file not found: " + config.mdp.path.string());
  }
}

}  // namespace

std::string digest(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

std::string canonical_text(const RunConfig& c, bool include_seed) {
  std::map<std::string, std::string> lines;
  lines["mdp.kind"] = c.mdp.kind;
  if (c.mdp.kind == "file") {
    lines["mdp.path"] = c.mdp.path.lexically_normal().string();
  } else {
    lines["mdp.seed"] = std::to_string(c.mdp.seed);
    lines["mdp.H"] = std::to_string(c.mdp.horizon);
    lines["mdp.A"] = std::to_string(c.mdp.num_actions);
    if (c.mdp.kind == "chain") {
      lines["mdp.N"] = std::to_string(c.mdp.chain_length);
    } else {
      lines["mdp.S"] = std::to_string(c.mdp.num_states);
      lines["mdp.d"] = std::to_string(c.mdp.dim);
    }
  }
  lines["mdp.perturb"] = fmt(c.mdp.perturb);
  lines["agent.kind"] = c.agent.kind;
  if (c.agent.kind == "opt_rlsvi") {
    const RlsviConfig& r = c.agent.rlsvi;
    lines["agent.lambda"] = fmt(r.lambda);
    lines["agent.delta"] = fmt(r.delta);
    lines["agent.c1"] = fmt(r.c1);
    lines["agent.c2"] = fmt(r.c2);
    lines["agent.practical_scale"] = fmt(r.practical_scale);
    lines["agent.planned_episodes"] = std::to_string(r.planned_episodes);
    lines["agent.freeze_cutoffs"] = r.freeze_cutoffs ? "true" : "false";
    lines["agent.recompute_period"] = std::to_string(r.recompute_period);
  } else {
    const BaselineConfig& b = c.agent.baseline;
    lines["agent.lambda"] = fmt(b.lambda);
    lines["agent.bonus_scale"] = fmt(b.bonus_scale);
    lines["agent.epsilon_explore"] = fmt(b.epsilon_explore);
    lines["agent.clip_high"] = b.clip_high ? "true" : "false";
    lines["agent.recompute_period"] = std::to_string(b.recompute_period);
  }
  lines["run.episodes"] = std::to_string(c.episodes);
  if (include_seed) lines["run.seed"] = std::to_string(c.seed);
  lines["run.optimism_resamples"] = std::to_string(c.optimism_resamples);
  lines["run.resample_from"] = std::to_string(c.resample_from);
  lines["run.diagnostics"] = c.diagnostics ? "true" : "false";

  std::string text;
  for (const auto& [key, value] : lines) text += key + " = " + value + "\n";
  return text;
}

RunConfig parse_run_config(const pt::ptree& tree) {
  check_keys(tree);
  RunConfig c;
  MdpSource& m = c.mdp;
  m.kind = get<std::string>(tree, "mdp.kind", m.kind);
  if (m.kind != "mixture" && m.kind != "chain" && m.kind != "file") {
    throw InvalidConfiguration("mdp.kind must be mixture, chain or file, got '" + m.kind + "'");
  }
  m.num_states = get<std::size_t>(tree, "mdp.S", m.num_states);
  m.num_actions = get<std::size_t>(tree, "mdp.A", m.kind == "chain" ? 2 : m.num_actions);
  m.horizon = get<std::size_t>(tree, "mdp.H", m.horizon);
  m.dim = get<std::size_t>(tree, "mdp.d", m.dim);
  m.chain_length = get<std::size_t>(tree, "mdp.N", m.chain_length);
  m.seed = get<std::uint64_t>(tree, "mdp.seed", m.seed);
  m.perturb = get<double>(tree, "mdp.perturb", m.perturb);
  m.path = get<std::string>(tree, "mdp.path", "");
  if (m.kind == "file" && m.path.empty()) {
    throw InvalidConfiguration("mdp.kind = file requires mdp.path");
  }

  c.episodes = get<std::size_t>(tree, "run.episodes", c.episodes);
  if (c.episodes == 0) throw InvalidConfiguration("run.episodes must be positive");
  c.seed = get<std::uint64_t>(tree, "run.seed", c.seed);
  c.optimism_resamples = get<std::size_t>(tree, "run.optimism_resamples", 0);
  c.resample_from = get<std::size_t>(tree, "run.resample_from", 1);
  c.diagnostics = get<bool>(tree, "run.diagnostics", true);
  c.output_dir = get<std::string>(tree, "run.output", "");

  AgentSpec& a = c.agent;
  a.kind = get<std::string>(tree, "agent.kind", a.kind);
  const double lambda = get<double>(tree, "agent.lambda", 1.0);
  const auto period = get<std::size_t>(tree, "agent.recompute_period", kDefaultRecomputePeriod);
  if (!(lambda > 0.0)) throw InvalidConfiguration("agent.lambda must be positive");
  if (period == 0) throw InvalidConfiguration("agent.recompute_period must be positive");
  if (a.kind == "opt_rlsvi") {
    RlsviConfig& r = a.rlsvi;
    r.lambda = lambda;
    r.recompute_period = period;
    r.delta = get<double>(tree, "agent.delta", r.delta);
    r.c1 = get<double>(tree, "agent.c1", r.c1);
    r.c2 = get<double>(tree, "agent.c2", r.c2);
    r.practical_scale = get<double>(tree, "agent.practical_scale", r.practical_scale);
    r.planned_episodes = get<std::size_t>(tree, "agent.planned_episodes", c.episodes);
    r.freeze_cutoffs = get<bool>(tree, "agent.freeze_cutoffs", false);
    const double delta_max = max_confidence_delta();
    if (!(r.delta > 0.0 && r.delta < delta_max)) {
      std::ostringstream msg;
      msg << "agent.delta = " << r.delta
          << " is out of range: the confidence level requires 0 < delta < Phi(-1) ~= "
          << delta_max;
      throw InvalidConfiguration(msg.str());
    }
    if (!(r.c1 > 0.0) || !(r.c2 > 0.0)) throw InvalidConfiguration("agent.c1 and agent.c2 must be positive");
    if (!(r.practical_scale > 0.0)) throw InvalidConfiguration("agent.practical_scale must be positive");
    if (r.planned_episodes == 0) throw InvalidConfiguration("agent.planned_episodes must be positive");
  } else {
    BaselineConfig& b = a.baseline;
    try {
      b.kind = parse_baseline_kind(a.kind);
    } catch (const InvalidArgument&) {
      throw InvalidConfiguration("agent.kind must be opt_rlsvi, ucb, greedy or epsilon_greedy, got '" +
                                 a.kind + "'");
    }
    b.lambda = lambda;
    b.recompute_period = period;
    b.bonus_scale = get<double>(tree, "agent.bonus_scale", b.bonus_scale);
    b.epsilon_explore = get<double>(tree, "agent.epsilon_explore", b.epsilon_explore);
    b.clip_high = get<bool>(tree, "agent.clip_high", b.clip_high);
    if (!(b.bonus_scale >= 0.0)) throw InvalidConfiguration("agent.bonus_scale must be >= 0");
    if (!(b.epsilon_explore >= 0.0 && b.epsilon_explore <= 1.0)) {
      throw InvalidConfiguration("agent.epsilon_explore must lie in [0, 1]");
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig config = parse_run_config(read_ini(path));
  resolve_paths(config, path.parent_path());
  return config;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  pt::ptree tree = read_ini(path);
  SweepConfig sweep;
  sweep.base_dir = path.parent_path();
  if (const auto node = tree.get_child_optional("sweep")) {
    for (const auto& [key, value] : *node) {
      if (key == "seeds") {
        sweep.num_seeds = get<std::size_t>(*node, "seeds", 1);
      } else if (key == "base_seed") {
        sweep.base_seed = get<std::uint64_t>(*node, "base_seed", 0);
      } else if (key == "output") {
        sweep.output_dir = value.data();
      } else {
        throw InvalidConfiguration("unknown key '" + key + "' in [sweep]");
      }
    }
    if (!node->get_child_optional("base_seed")) {
      sweep.base_seed = get<std::uint64_t>(tree, "run.seed", 0);
    }
    tree.erase("sweep");
  } else {
    sweep.base_seed = get<std::uint64_t>(tree, "run.seed", 0);
  }
  if (sweep.num_seeds == 0) throw InvalidConfiguration("sweep.seeds must be positive");
  if (const auto node = tree.get_child_optional("grid")) {
    for (const auto& [key, value] : *node) {
      auto values = split_list(value.data());
      if (values.empty()) throw InvalidConfiguration("grid entry '" + key + "' has no values");
      sweep.grid.emplace_back(key, std::move(values));
    }
    tree.erase("grid");
  }
  sweep.base = tree;
  // Surface configuration errors before any run starts.
  (void)expand_grid(sweep);
  return sweep;
}

std::vector<SweepCell> expand_grid(const SweepConfig& sweep) {
  std::vector<SweepCell> cells;
  std::vector<std::size_t> choice(sweep.grid.size(), 0);
  while (true) {
    pt::ptree tree = sweep.base;
    std::string label;
    for (std::size_t i = 0; i < sweep.grid.size(); ++i) {
      const auto& [key, values] = sweep.grid[i];
      tree.put(key, values[choice[i]]);
      if (!label.empty()) label += ';';
      label += key + "=" + values[choice[i]];
    }
    RunConfig config = parse_run_config(tree);
    resolve_paths(config, sweep.base_dir);
    cells.push_back({label.empty() ? "base" : label, std::move(config)});

    std::size_t i = sweep.grid.size();
    while (i > 0) {
      --i;
      if (++choice[i] < sweep.grid[i].second.size()) break;
      choice[i] = 0;
      if (i == 0) return cells;
    }
    if (sweep.grid.empty()) return cells;
  }
}

LowRankMdp build_mdp(const MdpSource& source) {
  LowRankMdp mdp;
  if (source.kind == "mixture") {
    mdp = generate_mixture_mdp(source.num_states, source.num_actions, source.horizon,
                               source.dim, source.seed);
  } else if (source.kind == "chain") {
    mdp = generate_hard_chain(source.chain_length, source.horizon, source.seed,
                              source.num_actions);
  } else {
    mdp = load_mdp(source.path);
  }
  if (source.perturb > 0.0) mdp = perturb_transitions(mdp, source.perturb, source.seed);
  return mdp;
}

std::unique_ptr<Agent> build_agent(const AgentSpec& spec, const LowRankMdp& mdp,
                                   std::size_t planned_episodes) {
  if (spec.kind == "opt_rlsvi") {
    RlsviConfig config = spec.rlsvi;
    if (planned_episodes > 0) config.planned_episodes = planned_episodes;
    return std::make_unique<OptRlsviAgent>(OptRlsviAgent::for_mdp(mdp, config));
  }
  return std::make_unique<BaselineAgent>(mdp.features, spec.baseline);
}

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv("OPTRLSVI_OUTPUT_ROOT"); root && *root) return root;
  return "results";
}

}  // namespace optrlsvi::cli
