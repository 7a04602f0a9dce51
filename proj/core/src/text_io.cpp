#include "latticeopt/text_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace latticeopt {
namespace {

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", source, line, what) : fmt::format("{}: {}", source, what)),
      line_(line) {}

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

double parse_real(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw std::invalid_argument(fmt::format("not a number: '{}'", text));
  }
  return v;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw std::invalid_argument(fmt::format("not an integer: '{}'", text));
  }
  return v;
}

UnitTopology read_topology(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(source, 1, "missing 'm=<int>' header");
  header = trim_cr(header);
  if (header.rfind("m=", 0) != 0) throw ParseError(source, 1, "expected 'm=<int>', got '" + header + "'");
  int m = 0;
  try {
    m = static_cast<int>(parse_int(std::string_view(header).substr(2)));
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 1, e.what());
  }
  if (m < 1) throw ParseError(source, 1, "grid resolution must be >= 1");

  std::string bits;
  if (!std::getline(in, bits)) throw ParseError(source, 2, "missing topology bit string");
  bits = trim_cr(bits);
  if (bits.size() != static_cast<std::size_t>(member_count(m))) {
    throw ParseError(source, 2,
                     fmt::format("expected {} characters for m={}, got {}", member_count(m), m, bits.size()));
  }
  try {
    return UnitTopology::from_string(m, bits);
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 2, e.what());
  }
}

UnitTopology read_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return read_topology(in, path.string());
}

void write_topology(std::ostream& out, const UnitTopology& x) {
  out << "m=" << x.m() << '\n' << x.to_string() << '\n';
}

void write_topology(const std::filesystem::path& path, const UnitTopology& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_topology(out, x);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return fmt::format("{:016x}", h);
}

}  // namespace latticeopt
