#include "manifest.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "json.hpp"
#include "latticeopt/text_io.hpp"

namespace latticeopt::cli {

std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  p += ".manifest.json";
  return p;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["tool"] = "latticeopt";
  j["subcommand"] = manifest.subcommand;
  j["args"] = manifest.args;
  auto& params = j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : manifest.params) params[k] = v;
  auto& outputs = j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& out : manifest.outputs) {
    outputs.push_back({{"path", out.string()}, {"fnv1a64", file_checksum(out)}});
  }
  j["started_utc"] = manifest.started_utc;
  j["wall_clock_seconds"] = manifest.wall_clock_seconds;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

LoadedManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, std::string("malformed manifest: ") + e.what());
  }
  LoadedManifest out;
  try {
    out.run.subcommand = j.at("subcommand").get<std::string>();
    out.run.args = j.at("args").get<std::vector<std::string>>();
    for (const auto& o : j.at("outputs")) {
      out.checksums.emplace_back(o.at("path").get<std::string>(), o.at("fnv1a64").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, std::string("incomplete manifest: ") + e.what());
  }
  return out;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", std::chrono::floor<std::chrono::seconds>(t));
}

}  // namespace latticeopt::cli
