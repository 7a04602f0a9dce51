#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace latticeopt::cli {

/// Written next to the primary output of every subcommand that creates files.
/// `args` is the fully resolved flag list, so replaying it does not depend on
/// the defaults of the binary that reads the manifest.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> args;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::filesystem::path> outputs;
  double wall_clock_seconds = 0.0;
  std::string started_utc;
};

std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output);

/// Adds checksums of every output and writes JSON.
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

struct LoadedManifest {
  RunManifest run;
  /// (path, checksum) as recorded.
  std::vector<std::pair<std::filesystem::path, std::string>> checksums;
};

LoadedManifest read_manifest(const std::filesystem::path& path);

std::string utc_timestamp(std::chrono::system_clock::time_point t);

}  // namespace latticeopt::cli
