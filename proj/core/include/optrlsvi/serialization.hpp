#pragma once

// Versioned whitespace-separated text format shared by MDP files and agent
// checkpoints. Reals use the shortest representation that parses back to
// the same double, so files round-trip bit-exactly. Lines starting with '#'
// are comments.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "optrlsvi/mdp.hpp"

namespace optrlsvi {

inline constexpr std::string_view kMdpFormatTag = "optrlsvi-mdp";
inline constexpr int kMdpFormatVersion = 1;

/// Shortest round-trip decimal form of x.
std::string format_double(double x);
double parse_double(std::string_view text);

/// Pulls tokens from a stream, skipping '#' comment lines.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next();
  void expect(std::string_view keyword);
  double next_double() { return parse_double(next()); }
  std::uint64_t next_uint();
  bool at_end();

 private:
  std::istream& in_;
};

void write_mdp(std::ostream& out, const LowRankMdp& mdp);
LowRankMdp read_mdp(std::istream& in);

/// Writes content to path through a temporary sibling and a rename, so the
/// target is either absent/old or complete.
void atomic_write(const std::filesystem::path& path, std::string_view content);

void save_mdp(const std::filesystem::path& path, const LowRankMdp& mdp);
LowRankMdp load_mdp(const std::filesystem::path& path);

}  // namespace optrlsvi
