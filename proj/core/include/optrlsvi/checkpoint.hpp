#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string_view>

#include "optrlsvi/agent.hpp"

namespace optrlsvi {

inline constexpr std::string_view kCheckpointFormatTag = "optrlsvi-agent";
inline constexpr int kCheckpointFormatVersion = 1;

/// Agent configuration plus the full replay, in the same text scheme as MDP
/// files. Designs are rebuilt on load by replaying the updates in their
/// original order, so a restored agent is bit-identical to the saved one.
/// Only agents between episodes can be saved.
void write_checkpoint(std::ostream& out, const Agent& agent);

/// Features are not stored; they come from the MDP the agent ran on.
std::unique_ptr<Agent> read_checkpoint(std::istream& in, const FeatureMap& features);

void save_checkpoint(const std::filesystem::path& path, const Agent& agent);
std::unique_ptr<Agent> load_checkpoint(const std::filesystem::path& path,
                                       const FeatureMap& features);

}  // namespace optrlsvi
