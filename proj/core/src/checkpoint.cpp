#include "optrlsvi/checkpoint.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "optrlsvi/agent_baselines.hpp"
#include "optrlsvi/agent_rlsvi.hpp"
#include "optrlsvi/errors.hpp"
#include "optrlsvi/serialization.hpp"

namespace optrlsvi {
namespace {

void write_optional(std::ostream& out, std::string_view key, const std::optional<double>& v) {
  out << key << ' ' << (v ? format_double(*v) : std::string("none")) << '\n';
}

std::optional<double> read_optional(TokenReader& in, std::string_view key) {
  in.expect(key);
  const std::string token = in.next();
  if (token == "none") return std::nullopt;
  return parse_double(token);
}

double read_real(TokenReader& in, std::string_view key) {
  in.expect(key);
  return in.next_double();
}

std::uint64_t read_count(TokenReader& in, std::string_view key) {
  in.expect(key);
  return in.next_uint();
}

}  // namespace

void write_checkpoint(std::ostream& out, const Agent& agent) {
  const LsviHistory& h = agent.history();
  if (h.mid_episode()) throw ProtocolViolation("cannot checkpoint in the middle of an episode");
  const FeatureMap& f = h.features();
  out << kCheckpointFormatTag << ' ' << kCheckpointFormatVersion << '\n'
      << "kind " << agent.kind() << '\n'
      << "shape " << f.num_states() << ' ' << f.num_actions() << ' ' << f.horizon()
      << ' ' << f.dim() << '\n';

  if (const auto* rlsvi = dynamic_cast<const OptRlsviAgent*>(&agent)) {
    const RlsviConfig& c = rlsvi->config();
    const ProblemConstants& k = rlsvi->constants();
    out << "lambda " << format_double(c.lambda) << '\n'
        << "recompute_period " << c.recompute_period << '\n'
        << "delta " << format_double(c.delta) << '\n'
        << "c1 " << format_double(c.c1) << '\n'
        << "c2 " << format_double(c.c2) << '\n'
        << "practical_scale " << format_double(c.practical_scale) << '\n'
        << "planned_episodes " << c.planned_episodes << '\n'
        << "freeze_cutoffs " << (c.freeze_cutoffs ? 1 : 0) << '\n';
    write_optional(out, "fixed_sigma", c.fixed_sigma);
    write_optional(out, "fixed_alpha_upper", c.fixed_alpha_upper);
    out << "l_phi " << format_double(k.l_phi) << '\n'
        << "l_psi " << format_double(k.l_psi) << '\n'
        << "l_r " << format_double(k.l_r) << '\n'
        << "epsilon " << format_double(k.epsilon) << '\n';
  } else if (const auto* base = dynamic_cast<const BaselineAgent*>(&agent)) {
    const BaselineConfig& c = base->config();
    out << "lambda " << format_double(c.lambda) << '\n'
        << "recompute_period " << c.recompute_period << '\n'
        << "bonus_scale " << format_double(c.bonus_scale) << '\n'
        << "epsilon_explore " << format_double(c.epsilon_explore) << '\n'
        << "clip_high " << (c.clip_high ? 1 : 0) << '\n';
  } else {
    throw InvalidArgument("agent kind '" + agent.kind() + "' has no checkpoint format");
  }

  out << "episodes " << h.completed_episodes() << '\n';
  for (std::size_t t = 0; t < h.horizon(); ++t) {
    out << "timestep " << t << '\n';
    for (const auto& e : h.replay(t)) {
      out << e.state << ' ' << e.action << ' ' << format_double(e.reward) << ' '
          << e.next_state << '\n';
    }
  }
  out << "end\n";
}

std::unique_ptr<Agent> read_checkpoint(std::istream& stream, const FeatureMap& features) {
  TokenReader in(stream);
  in.expect(kCheckpointFormatTag);
  if (in.next_uint() != kCheckpointFormatVersion) throw ParseError("unsupported checkpoint version");
  in.expect("kind");
  const std::string kind = in.next();
  in.expect("shape");
  const std::uint64_t S = in.next_uint(), A = in.next_uint(), H = in.next_uint(),
                      d = in.next_uint();
  if (S != features.num_states() || A != features.num_actions() ||
      H != features.horizon() || d != features.dim()) {
    throw InvalidArgument("checkpoint shape does not match the MDP features");
  }

  std::unique_ptr<Agent> agent;
  if (kind == "opt_rlsvi") {
    RlsviConfig c;
    c.lambda = read_real(in, "lambda");
    c.recompute_period = read_count(in, "recompute_period");
    c.delta = read_real(in, "delta");
    c.c1 = read_real(in, "c1");
    c.c2 = read_real(in, "c2");
    c.practical_scale = read_real(in, "practical_scale");
    c.planned_episodes = read_count(in, "planned_episodes");
    c.freeze_cutoffs = read_count(in, "freeze_cutoffs") != 0;
    c.fixed_sigma = read_optional(in, "fixed_sigma");
    c.fixed_alpha_upper = read_optional(in, "fixed_alpha_upper");
    ProblemConstants k;
    k.horizon = H;
    k.dim = d;
    k.l_phi = read_real(in, "l_phi");
    k.l_psi = read_real(in, "l_psi");
    k.l_r = read_real(in, "l_r");
    k.epsilon = read_real(in, "epsilon");
    agent = std::make_unique<OptRlsviAgent>(features, k, c);
  } else {
    BaselineConfig c;
    c.kind = parse_baseline_kind(kind);
    c.lambda = read_real(in, "lambda");
    c.recompute_period = read_count(in, "recompute_period");
    c.bonus_scale = read_real(in, "bonus_scale");
    c.epsilon_explore = read_real(in, "epsilon_explore");
    c.clip_high = read_count(in, "clip_high") != 0;
    agent = std::make_unique<BaselineAgent>(features, c);
  }

  struct Row {
    std::size_t s, a;
    double r;
    std::size_t next;
  };
  const std::uint64_t episodes = read_count(in, "episodes");
  std::vector<std::vector<Row>> rows(H);
  for (std::size_t t = 0; t < H; ++t) {
    in.expect("timestep");
    if (in.next_uint() != t) throw ParseError("checkpoint timesteps out of order");
    rows[t].resize(episodes);
    for (auto& row : rows[t]) {
      row.s = in.next_uint();
      row.a = in.next_uint();
      row.r = in.next_double();
      row.next = in.next_uint();
    }
  }
  in.expect("end");

  for (std::size_t k = 0; k < episodes; ++k) {
    for (std::size_t t = 0; t < H; ++t) {
      const Row& row = rows[t][k];
      agent->restore(t, row.s, row.a, row.r, row.next);
    }
  }
  return agent;
}

void save_checkpoint(const std::filesystem::path& path, const Agent& agent) {
  std::ostringstream out;
  write_checkpoint(out, agent);
  atomic_write(path, out.str());
}

std::unique_ptr<Agent> load_checkpoint(const std::filesystem::path& path,
                                       const FeatureMap& features) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  return read_checkpoint(in, features);
}

}  // namespace optrlsvi
