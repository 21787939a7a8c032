#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "optrlsvi/version.hpp"

int main(int argc, char** argv) {
  using namespace optrlsvi::cli;

  CLI::App app{"Randomized least-squares value iteration on low-rank MDPs"};
  app.set_version_flag("--version", std::string(optrlsvi::kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic MDP and its validation report");
  generate->add_option("--kind", gen.kind, "mixture or chain")->capture_default_str();
  generate->add_option("--S", gen.num_states, "Number of states (mixture)")->capture_default_str();
  generate->add_option("--A", gen.num_actions, "Number of actions (default 3, chain 2)");
  generate->add_option("--H", gen.horizon, "Horizon")->capture_default_str();
  generate->add_option("--d", gen.dim, "Feature dimension (mixture)")->capture_default_str();
  generate->add_option("--N", gen.chain_length, "Chain length (chain)")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  generate->add_option("--perturb", gen.perturb, "Transition perturbation magnitude");
  generate->add_option("--out", gen.out, "Output MDP file");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one agent on one MDP");
  run->add_option("config", run_args.config, "Run config file")->required();
  run->add_option("--output", run_args.output_dir, "Override the output directory");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid over several seeds");
  sweep->add_option("config", sweep_args.config, "Sweep config file")->required();
  sweep->add_option("--threads", sweep_args.threads, "Worker threads, 0 = all cores")
      ->capture_default_str();
  sweep->add_option("--output", sweep_args.output_dir, "Override the output directory");

  std::filesystem::path validate_path;
  auto* validate = app.add_subcommand("validate", "Check an MDP file against its low-rank model");
  validate->add_option("--mdp", validate_path, "MDP file")->required();

  DiagnoseArgs diag;
  auto* diagnose = app.add_subcommand("diagnose", "Recompute per-timestep noise norms from a checkpoint");
  diagnose->add_option("--mdp", diag.mdp, "MDP file the agent ran on")->required();
  diagnose->add_option("--checkpoint", diag.checkpoint, "Agent checkpoint")->required();
  diagnose->add_option("--seed", diag.seed, "Seed for the replan")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*generate) return cmd_generate(gen, std::cout, std::cerr);
  if (*run) return cmd_run(run_args, std::cout, std::cerr);
  if (*sweep) return cmd_sweep(sweep_args, std::cout, std::cerr);
  if (*validate) return cmd_validate(validate_path, std::cout, std::cerr);
  return cmd_diagnose(diag, std::cout, std::cerr);
}
