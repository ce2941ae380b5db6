#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace progresskit {

// FNV-1a 64-bit digest as lowercase hex; used to record input identity in run
// manifests and to compare artifacts across reruns.
std::string fnv1a_hex(std::string_view bytes);
std::string fnv1a_file_hex(const std::filesystem::path& path);

// Provenance record written next to every command's outputs. Reruns with
// identical inputs and seeds reproduce identical data artifacts; the manifest
// itself carries the wall-clock timestamp.
struct RunManifest {
  std::string command;
  std::string tool_version;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  std::string created_at;
};

inline constexpr std::string_view kManifestFileName = "manifest.json";

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

std::string current_timestamp_utc();

}  // namespace progresskit
