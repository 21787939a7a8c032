#include "optrlsvi/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "optrlsvi/errors.hpp"

namespace optrlsvi {

std::string format_double(double x) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  if (result.ec != std::errc()) throw NumericError("cannot format double");
  return std::string(buf, result.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    // from_chars rejects "inf"/"nan" spellings produced by to_chars on some
    // libraries only with a sign; accept them explicitly.
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    if (text == "nan") return NAN;
    throw ParseError("expected a real number, got '" + std::string(text) + "'");
  }
  return value;
}

std::string TokenReader::next() {
  std::string token;
  while (in_ >> token) {
    if (token.front() == '#') {
      std::string rest;
      std::getline(in_, rest);
      continue;
    }
    return token;
  }
  throw ParseError("unexpected end of input");
}

void TokenReader::expect(std::string_view keyword) {
  const std::string token = next();
  if (token != keyword) {
    throw ParseError("expected '" + std::string(keyword) + "', got '" + token + "'");
  }
}

std::uint64_t TokenReader::next_uint() {
  const std::string token = next();
  std::uint64_t value = 0;
  const auto* end = token.data() + token.size();
  const auto result = std::from_chars(token.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ParseError("expected an unsigned integer, got '" + token + "'");
  }
  return value;
}

bool TokenReader::at_end() {
  while (true) {
    in_ >> std::ws;
    if (in_.peek() != '#') break;
    std::string rest;
    std::getline(in_, rest);
  }
  return in_.peek() == std::char_traits<char>::eof();
}

namespace {

template <typename Derived>
void write_values(std::ostream& out, const Eigen::DenseBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

template <typename Derived>
void read_values(TokenReader& in, Eigen::DenseBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in.next_double();
  }
}

void expect_index(TokenReader& in, std::string_view keyword, std::size_t t) {
  in.expect(keyword);
  if (in.next_uint() != t) {
    throw ParseError("table '" + std::string(keyword) + "' out of order");
  }
}

}  // namespace

void write_mdp(std::ostream& out, const LowRankMdp& mdp) {
  const FeatureMap& f = mdp.features;
  out << kMdpFormatTag << ' ' << kMdpFormatVersion << '\n'
      << "num_states " << f.num_states() << '\n'
      << "num_actions " << f.num_actions() << '\n'
      << "horizon " << f.horizon() << '\n'
      << "dim " << f.dim() << '\n'
      << "epsilon " << format_double(mdp.epsilon) << '\n'
      << "l_phi " << format_double(f.l_phi) << '\n'
      << "l_psi " << format_double(mdp.l_psi) << '\n'
      << "l_r " << format_double(mdp.l_r) << '\n'
      << "initial\n";
  write_values(out, mdp.initial_distribution.transpose());
  for (std::size_t t = 0; t < f.horizon(); ++t) {
    out << "# timestep " << t << "\nphi " << t << '\n';
    write_values(out, f.timestep(t).transpose());
    out << "psi " << t << '\n';
    write_values(out, mdp.psi[t]);
    out << "theta_r " << t << '\n';
    write_values(out, mdp.theta_r[t].transpose());
    out << "transition " << t << '\n';
    write_values(out, mdp.transition[t]);
    out << "reward " << t << '\n';
    write_values(out, mdp.reward[t].transpose());
  }
  out << "end\n";
}

LowRankMdp read_mdp(std::istream& stream) {
  TokenReader in(stream);
  in.expect(kMdpFormatTag);
  const auto version = in.next_uint();
  if (version != kMdpFormatVersion) {
    throw ParseError("unsupported MDP format version " + std::to_string(version));
  }
  in.expect("num_states");
  const auto S = in.next_uint();
  in.expect("num_actions");
  const auto A = in.next_uint();
  in.expect("horizon");
  const auto H = in.next_uint();
  in.expect("dim");
  const auto d = in.next_uint();
  if (S == 0 || A == 0 || H == 0 || d == 0) throw ParseError("MDP sizes must be positive");

  LowRankMdp mdp = make_empty_mdp(S, A, H, d);
  in.expect("epsilon");
  mdp.epsilon = in.next_double();
  in.expect("l_phi");
  mdp.features.l_phi = in.next_double();
  in.expect("l_psi");
  mdp.l_psi = in.next_double();
  in.expect("l_r");
  mdp.l_r = in.next_double();
  in.expect("initial");
  for (auto& p : mdp.initial_distribution) p = in.next_double();
  for (std::size_t t = 0; t < H; ++t) {
    expect_index(in, "phi", t);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        for (auto& v : mdp.features.phi(t, s, a)) v = in.next_double();
      }
    }
    expect_index(in, "psi", t);
    read_values(in, mdp.psi[t]);
    expect_index(in, "theta_r", t);
    for (auto& v : mdp.theta_r[t]) v = in.next_double();
    expect_index(in, "transition", t);
    read_values(in, mdp.transition[t]);
    expect_index(in, "reward", t);
    for (auto& v : mdp.reward[t]) v = in.next_double();
  }
  in.expect("end");
  return mdp;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_mdp(const std::filesystem::path& path, const LowRankMdp& mdp) {
  std::ostringstream out;
  write_mdp(out, mdp);
  atomic_write(path, out.str());
}

LowRankMdp load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open MDP file " + path.string());
  return read_mdp(in);
}

}  // namespace optrlsvi
