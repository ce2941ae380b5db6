#include "progresskit/hidden_state_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "progresskit/errors.hpp"

namespace progresskit {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'P', 'P', 'H', 'S'};

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32_le(std::string& out, float v) { put_u32_le(out, std::bit_cast<std::uint32_t>(v)); }

float get_f32_le(const unsigned char* p) { return std::bit_cast<float>(get_u32_le(p)); }

void put_f64_le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  put_u32_le(out, static_cast<std::uint32_t>(bits & 0xffffffffULL));
  put_u32_le(out, static_cast<std::uint32_t>(bits >> 32));
}

double get_f64_le(const unsigned char* p) {
  const std::uint64_t lo = get_u32_le(p);
  const std::uint64_t hi = get_u32_le(p + 4);
  return std::bit_cast<double>(lo | (hi << 32));
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_hidden_states(const std::filesystem::path& path, const HiddenStateMatrix& hs) {
  if (hs.d < 1 || hs.m < 1 || hs.n_question_rows < 0) {
    throw DataError("hidden-state matrix has invalid shape");
  }
  if (hs.question_rows.size() != static_cast<std::size_t>(hs.n_question_rows) * hs.d ||
      hs.token_rows.size() != static_cast<std::size_t>(hs.m) * hs.d) {
    throw DataError("hidden-state row storage does not match header");
  }

  std::string bytes;
  bytes.reserve(20 + 4 * (hs.question_rows.size() + hs.token_rows.size()));
  bytes.append(kMagic, 4);
  put_u32_le(bytes, kHiddenStateFormatVersion);
  put_u32_le(bytes, static_cast<std::uint32_t>(hs.d));
  put_u32_le(bytes, static_cast<std::uint32_t>(hs.n_question_rows));
  put_u32_le(bytes, static_cast<std::uint32_t>(hs.m));
  for (float v : hs.question_rows) put_f32_le(bytes, v);
  for (float v : hs.token_rows) put_f32_le(bytes, v);
  write_file_bytes(path, bytes);
}

HiddenStateMatrix read_hidden_states(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("not a PPHS file: " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = get_u32_le(p + 4);
  if (version != kHiddenStateFormatVersion) {
    throw ParseError("unsupported PPHS version " + std::to_string(version));
  }

  HiddenStateMatrix hs;
  hs.d = static_cast<int>(get_u32_le(p + 8));
  hs.n_question_rows = static_cast<int>(get_u32_le(p + 12));
  hs.m = static_cast<int>(get_u32_le(p + 16));
  if (hs.d < 1 || hs.m < 1) throw ParseError("PPHS header has empty shape");

  const std::size_t n_values =
      (static_cast<std::size_t>(hs.n_question_rows) + hs.m) * static_cast<std::size_t>(hs.d);
  if (bytes.size() != 20 + 4 * n_values) {
    throw ParseError("PPHS payload truncated: " + path.string());
  }

  hs.question_rows.resize(static_cast<std::size_t>(hs.n_question_rows) * hs.d);
  hs.token_rows.resize(static_cast<std::size_t>(hs.m) * hs.d);
  const unsigned char* cursor = p + 20;
  for (float& v : hs.question_rows) {
    v = get_f32_le(cursor);
    cursor += 4;
  }
  for (float& v : hs.token_rows) {
    v = get_f32_le(cursor);
    cursor += 4;
  }
  for (float v : hs.question_rows) {
    if (!std::isfinite(v)) throw DataError("non-finite hidden state in " + path.string());
  }
  for (float v : hs.token_rows) {
    if (!std::isfinite(v)) throw DataError("non-finite hidden state in " + path.string());
  }
  return hs;
}

std::vector<FeatureManifestEntry> read_feature_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature manifest: " + path.string());
  std::vector<FeatureManifestEntry> entries;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("malformed manifest JSON at line " + std::to_string(line_number) + ": " +
                       e.what());
    }
    if (!obj.contains("id") || !obj.contains("path")) {
      throw SchemaError("manifest line " + std::to_string(line_number) +
                        " needs 'id' and 'path'");
    }
    entries.push_back({obj["id"].get<std::string>(), obj["path"].get<std::string>()});
  }
  return entries;
}

void write_feature_manifest(const std::filesystem::path& path,
                            std::span<const FeatureManifestEntry> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature manifest: " + path.string());
  for (const FeatureManifestEntry& entry : entries) {
    json obj = {{"id", entry.trace_id}, {"path", entry.path}};
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::filesystem::path resolve_manifest_path(const std::filesystem::path& manifest_path,
                                            const std::string& entry_path) {
  std::filesystem::path p(entry_path);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

void save_probe_model(const std::filesystem::path& path, const ProbeModel& model) {
  json header = {
      {"format", "progresskit-probe"},
      {"version", 1},
      {"q_buckets", model.q_buckets},
      {"feature_dim", model.feature_dim},
      {"mode", to_string(model.mode)},
      {"n_question_tokens", model.n_question_tokens},
      {"layer_tag", model.layer_tag},
      {"final_train_loss", model.final_train_loss},
  };
  std::string bytes = header.dump();
  bytes.push_back('\n');
  for (double v : model.weights) put_f64_le(bytes, v);
  for (double v : model.bias) put_f64_le(bytes, v);
  for (double v : model.feature_mean) put_f64_le(bytes, v);
  for (double v : model.feature_std) put_f64_le(bytes, v);
  write_file_bytes(path, bytes);
}

ProbeModel load_probe_model(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  const std::size_t newline = bytes.find('\n');
  if (newline == std::string::npos) throw ParseError("probe model missing header line");

  json header;
  try {
    header = json::parse(bytes.substr(0, newline));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed probe model header: ") + e.what());
  }
  if (header.value("format", "") != "progresskit-probe") {
    throw ParseError("not a probe model file: " + path.string());
  }

  ProbeModel model;
  model.q_buckets = header.at("q_buckets").get<int>();
  model.feature_dim = header.at("feature_dim").get<int>();
  model.mode = probe_mode_from_string(header.at("mode").get<std::string>());
  model.n_question_tokens = header.at("n_question_tokens").get<int>();
  model.layer_tag = header.at("layer_tag").get<std::string>();
  model.final_train_loss = header.at("final_train_loss").get<double>();
  if (model.q_buckets < 2 || model.feature_dim < 1) {
    throw ParseError("probe model header has invalid shape");
  }

  const std::size_t n_doubles = static_cast<std::size_t>(model.q_buckets) * model.feature_dim +
                                model.q_buckets + 2 * static_cast<std::size_t>(model.feature_dim);
  if (bytes.size() != newline + 1 + 8 * n_doubles) {
    throw ParseError("probe model payload truncated: " + path.string());
  }

  const auto* cursor = reinterpret_cast<const unsigned char*>(bytes.data() + newline + 1);
  auto read_block = [&](std::vector<double>& out, std::size_t count) {
    out.resize(count);
    for (double& v : out) {
      v = get_f64_le(cursor);
      cursor += 8;
    }
  };
  read_block(model.weights, static_cast<std::size_t>(model.q_buckets) * model.feature_dim);
  read_block(model.bias, model.q_buckets);
  read_block(model.feature_mean, model.feature_dim);
  read_block(model.feature_std, model.feature_dim);
  return model;
}

}  // namespace progresskit
