#include "commands.hpp"

#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "config.hpp"
#include "optrlsvi/checkpoint.hpp"
#include "optrlsvi/errors.hpp"
#include "optrlsvi/harness.hpp"
#include "optrlsvi/serialization.hpp"
#include "optrlsvi/version.hpp"

namespace optrlsvi::cli {
namespace fs = std::filesystem;

namespace {

// Maps library exceptions onto exit codes; parse and parameter errors are
// usage errors, anything numeric or IO-related is a runtime error.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const InvalidConfiguration& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

std::string report_text(const ValidationReport& report, std::string_view digest_line) {
  std::ostringstream text;
  text << "# " << kVersion << '\n' << "# " << digest_line << '\n';
  text << report.describe();
  return text.str();
}

RunOptions run_options(const RunConfig& config, const std::string& config_digest) {
  RunOptions options;
  options.episodes = config.episodes;
  options.seed = config.seed;
  options.optimism_resamples = config.optimism_resamples;
  options.resample_from_episode = config.resample_from;
  options.diagnostics = config.diagnostics;
  options.config_digest = config_digest;
  return options;
}

std::string run_csv(const RunResult& result) {
  std::ostringstream text;
  write_run_csv(text, result, kVersion);
  return text.str();
}

std::string summary_csv(const RunSummary& summary) {
  std::ostringstream text;
  write_summary_csv(text, summary, kVersion);
  return text.str();
}

std::string checkpoint_text(const Agent& agent, const std::string& config_digest) {
  std::ostringstream text;
  text << "# " << kVersion << " config_digest=" << config_digest << '\n';
  write_checkpoint(text, agent);
  return text.str();
}

void check_dimensions(const LowRankMdp& mdp) {
  const ValidationReport report = validate(mdp);
  if (!report.solvable()) {
    throw InvalidConfiguration("MDP is not usable:\n" + report.describe());
  }
}

}  // namespace

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    MdpSource source;
    source.kind = args.kind;
    source.num_states = args.num_states;
    source.num_actions = args.num_actions.value_or(args.kind == "chain" ? 2 : 3);
    source.horizon = args.horizon;
    source.dim = args.dim;
    source.chain_length = args.chain_length;
    source.seed = args.seed;
    source.perturb = args.perturb;
    if (source.kind != "mixture" && source.kind != "chain") {
      throw InvalidConfiguration("--kind must be mixture or chain, got '" + source.kind + "'");
    }
    const LowRankMdp mdp = build_mdp(source);
    fs::path path = args.out;
    if (path.empty()) {
      path = default_output_root() / (args.kind + "-" + std::to_string(args.seed) + ".mdp");
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_mdp(path, mdp);

    const ValidationReport report = validate(mdp);
    fs::path report_path = path;
    report_path += ".validation.txt";
    atomic_write(report_path, report_text(report, "mdp=" + path.filename().string()));
    out << "wrote " << path.string() << " (S=" << mdp.num_states()
        << " A=" << mdp.num_actions() << " H=" << mdp.horizon()
        << " d=" << mdp.dim() << ")\n";
    if (!report.clean()) {
      err << report.describe();
      return static_cast<int>(kExitValidation);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_validate(const fs::path& mdp_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LowRankMdp mdp = load_mdp(mdp_path);
    const ValidationReport report = validate(mdp);
    out << report.describe();
    return static_cast<int>(report.clean() ? kExitOk : kExitValidation);
  });
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = load_run_config(args.config);
    const std::string config_digest = digest(canonical_text(config));
    const LowRankMdp mdp = build_mdp(config.mdp);
    check_dimensions(mdp);
    auto agent = build_agent(config.agent, mdp, 0);

    fs::path dir = args.output_dir.value_or(config.output_dir);
    if (dir.empty()) dir = default_output_root() / config_digest;

    const RunResult result = run(mdp, *agent, run_options(config, config_digest));

    // Everything is computed before the first file lands.
    const std::string run_text = run_csv(result);
    const std::string summary_text = summary_csv(result.summary);
    const std::string checkpoint = checkpoint_text(*agent, config_digest);
    fs::create_directories(dir);
    atomic_write(dir / "run.csv", run_text);
    atomic_write(dir / "summary.csv", summary_text);
    atomic_write(dir / "agent.ckpt", checkpoint);

    const RunSummary& s = result.summary;
    out << "config_digest " << config_digest << '\n'
        << "final_cumulative_regret " << format_double(s.final_regret()) << '\n'
        << "optimism_rate " << format_double(s.optimism_rate) << '\n'
        << "warmup_total " << s.warmup_total << '\n'
        << "output " << dir.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SweepConfig sweep_config = load_sweep_config(args.config);
    const std::vector<SweepCell> cells = expand_grid(sweep_config);

    std::string sweep_text;
    std::vector<SweepJob> jobs;
    std::map<std::string, std::shared_ptr<const LowRankMdp>> mdp_cache;
    for (const SweepCell& cell : cells) {
      const std::string cell_digest = digest(canonical_text(cell.config, false));
      sweep_text += cell.label + "\n" + canonical_text(cell.config, false);
      RunConfig mdp_only;
      mdp_only.mdp = cell.config.mdp;
      const std::string mdp_key = canonical_text(mdp_only);
      auto& mdp = mdp_cache[mdp_key];
      if (!mdp) {
        auto built = std::make_shared<LowRankMdp>(build_mdp(cell.config.mdp));
        check_dimensions(*built);
        mdp = std::move(built);
      }
      SweepJob job;
      job.label = cell.label;
      job.config_digest = cell_digest;
      job.mdp = mdp;
      job.make_agent = [spec = cell.config.agent](const LowRankMdp& m) {
        return build_agent(spec, m, 0);
      };
      job.options = run_options(cell.config, cell_digest);
      jobs.push_back(std::move(job));
    }
    const std::string sweep_digest =
        digest(sweep_text + "seeds=" + std::to_string(sweep_config.num_seeds) +
               " base_seed=" + std::to_string(sweep_config.base_seed));

    fs::path dir = args.output_dir.value_or(sweep_config.output_dir);
    if (dir.empty()) dir = default_output_root() / ("sweep-" + sweep_digest);
    fs::create_directories(dir / "runs");

    std::mutex io;
    SweepOptions options;
    options.num_seeds = sweep_config.num_seeds;
    options.base_seed = sweep_config.base_seed;
    options.threads = args.threads;
    options.on_run = [&](const SweepJob& job, std::uint64_t seed, const RunResult& result) {
      const std::string stem = job.config_digest + "-seed" + std::to_string(seed);
      const std::string text = run_csv(result) + "\n" + summary_csv(result.summary);
      atomic_write(dir / "runs" / (stem + ".csv"), text);
      std::lock_guard lock(io);
      out << "done " << job.label << " seed " << seed << " final_cumulative_regret "
          << format_double(result.summary.final_regret()) << '\n';
    };
    const std::vector<SweepRow> rows = sweep(jobs, options);

    std::ostringstream table;
    write_sweep_csv(table, rows, kVersion, sweep_digest);
    atomic_write(dir / "sweep.csv", table.str());
    out << "sweep_digest " << sweep_digest << '\n'
        << "rows " << rows.size() << '\n'
        << "output " << (dir / "sweep.csv").string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_diagnose(const DiagnoseArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LowRankMdp mdp = load_mdp(args.mdp);
    if (!fs::exists(args.checkpoint)) {
      throw InvalidArgument("checkpoint not found: " + args.checkpoint.string());
    }
    auto agent = load_checkpoint(args.checkpoint, mdp.features);
    std::seed_seq seq{static_cast<std::uint32_t>(args.seed),
                      static_cast<std::uint32_t>(args.seed >> 32)};
    Rng rng(seq);
    agent->plan_episode(rng);

    out << "# " << kVersion << " agent=" << agent->kind()
        << " episodes=" << agent->history().completed_episodes() << " seed=" << args.seed
        << '\n'
        << "t,eta_norm,xi_norm,xi_radius,xi_in_ball\n";
    const auto cut = agent->cutoffs();
    for (std::size_t t = 0; t < mdp.horizon(); ++t) {
      const double eta = eta_diagnostic(*agent, mdp, t);
      double xi_norm = 0.0;
      if (const auto xi = agent->pseudonoise(t)) {
        xi_norm = agent->history().design(t).mahalanobis_norm(*xi, NormKind::kForward);
      }
      const double radius = cut ? cut->xi_radius : 0.0;
      out << t << ',' << format_double(eta) << ',' << format_double(xi_norm) << ','
          << format_double(radius) << ',' << (cut && xi_norm <= radius ? 1 : 0) << '\n';
    }
    return static_cast<int>(kExitOk);
  });
}

}  // namespace optrlsvi::cli
