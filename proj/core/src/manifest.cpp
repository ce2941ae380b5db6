#include "progresskit/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>

#include "progresskit/errors.hpp"

namespace progresskit {

namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = kFnvOffset;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return to_hex(hash);
}

std::string fnv1a_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for digest: " + path.string());
  std::uint64_t hash = kFnvOffset;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= kFnvPrime;
    }
  }
  return to_hex(hash);
}

std::string current_timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
  json inputs = json::array();
  for (const auto& [path, digest] : manifest.inputs) {
    inputs.push_back({{"path", path}, {"digest", digest}});
  }
  json obj = {
      {"command", manifest.command},
      {"tool_version", manifest.tool_version},
      {"config", manifest.config},
      {"inputs", inputs},
      {"outputs", manifest.outputs},
      {"created_at", manifest.created_at},
  };
  if (manifest.seed.has_value()) obj["seed"] = *manifest.seed;

  const std::filesystem::path path = out_dir / kManifestFileName;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << obj.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace progresskit
