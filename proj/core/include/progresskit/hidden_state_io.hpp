#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "progresskit/probe.hpp"

namespace progresskit {

inline constexpr std::uint32_t kHiddenStateFormatVersion = 1;

// Per-trace hidden-state file layout, all integers little-endian:
//   magic "PPHS" | version u32 | d u32 | n_question_rows u32 | m u32
//   then (n_question_rows + m) rows of d IEEE-754 float32 values,
//   question rows first.
void write_hidden_states(const std::filesystem::path& path, const HiddenStateMatrix& hs);
HiddenStateMatrix read_hidden_states(const std::filesystem::path& path);

// JSONL manifest mapping trace ids to feature files; paths are stored
// relative to the manifest's directory.
struct FeatureManifestEntry {
  std::string trace_id;
  std::string path;
};

std::vector<FeatureManifestEntry> read_feature_manifest(const std::filesystem::path& path);
void write_feature_manifest(const std::filesystem::path& path,
                            std::span<const FeatureManifestEntry> entries);
std::filesystem::path resolve_manifest_path(const std::filesystem::path& manifest_path,
                                            const std::string& entry_path);

// Probe model file: one JSON header line, then float64 little-endian blocks
// for weights (Q x D), bias (Q), feature mean (D), feature std (D).
void save_probe_model(const std::filesystem::path& path, const ProbeModel& model);
ProbeModel load_probe_model(const std::filesystem::path& path);

}  // namespace progresskit
