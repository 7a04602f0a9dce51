#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "latticeopt/lattice.hpp"

namespace latticeopt {

/// Malformed input file. `line()` is 1-based, 0 when not line-specific.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// 17 significant digits, enough to round-trip any double.
std::string format_real(double value);

/// Strict decimal parse of a whole field; throws std::invalid_argument.
double parse_real(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// Topology text format: "m=<int>\n<4m^2 characters of 0/1>\n".
UnitTopology read_topology(std::istream& in, const std::string& source = "<stream>");
UnitTopology read_topology(const std::filesystem::path& path);
void write_topology(std::ostream& out, const UnitTopology& x);
void write_topology(const std::filesystem::path& path, const UnitTopology& x);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace latticeopt
