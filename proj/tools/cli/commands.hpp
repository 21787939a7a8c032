#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace optrlsvi::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitRuntime = 3,
};

struct GenerateArgs {
  std::string kind = "mixture";
  std::size_t num_states = 10;
  std::optional<std::size_t> num_actions;  // default 3, or 2 for chain
  std::size_t horizon = 5;
  std::size_t dim = 3;
  std::size_t chain_length = 5;
  std::uint64_t seed = 1;
  double perturb = 0.0;
  std::filesystem::path out;  // empty: <output root>/<kind>-<seed>.mdp
};

struct RunArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> output_dir;
};

struct SweepArgs {
  std::filesystem::path config;
  std::size_t threads = 0;
  std::optional<std::filesystem::path> output_dir;
};

struct DiagnoseArgs {
  std::filesystem::path mdp;
  std::filesystem::path checkpoint;
  std::uint64_t seed = 0;
};

// Each command reports to `out`/`err` and returns an ExitCode.
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& mdp, std::ostream& out, std::ostream& err);
int cmd_diagnose(const DiagnoseArgs& args, std::ostream& out, std::ostream& err);

}  // namespace optrlsvi::cli
