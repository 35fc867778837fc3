#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "termkit/detail/sha256.hpp"
#include "termkit/version.hpp"

namespace termkit {

struct FileDigest {
  std::string path;
  std::string sha256;
  std::uint64_t bytes = 0;
};

// Reproducibility sidecar emitted next to every artifact-producing run:
// re-running the recorded argv over inputs with these digests reproduces
// outputs with the recorded digests byte-for-byte.
struct RunManifest {
  std::string version = kVersion;
  std::string command;
  std::vector<std::string> argv;
  std::optional<std::uint64_t> seed;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string started_at;
  std::string finished_at;
};

inline FileDigest digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  detail::Sha256 hasher;
  char buf[65536];
  std::uint64_t total = 0;
  while (in) {
    in.read(buf, sizeof(buf));
    const auto got = static_cast<std::size_t>(in.gcount());
    hasher.update(buf, got);
    total += got;
  }
  FileDigest digest;
  digest.path = path;
  digest.bytes = total;
  const auto raw = hasher.digest();
  static const char* hex = "0123456789abcdef";
  digest.sha256.reserve(64);
  for (std::uint8_t byte : raw) {
    digest.sha256.push_back(hex[byte >> 4]);
    digest.sha256.push_back(hex[byte & 0xF]);
  }
  return digest;
}

inline std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void to_json(nlohmann::json& j, const FileDigest& d) {
  j = nlohmann::json{{"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}};
}

inline void from_json(const nlohmann::json& j, FileDigest& d) {
  j.at("path").get_to(d.path);
  j.at("sha256").get_to(d.sha256);
  j.at("bytes").get_to(d.bytes);
}

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"version", m.version},   {"command", m.command},
                     {"argv", m.argv},         {"inputs", m.inputs},
                     {"outputs", m.outputs},   {"started_at", m.started_at},
                     {"finished_at", m.finished_at}};
  if (m.seed) j["seed"] = *m.seed;
}

inline void from_json(const nlohmann::json& j, RunManifest& m) {
  j.at("version").get_to(m.version);
  j.at("command").get_to(m.command);
  j.at("argv").get_to(m.argv);
  m.inputs = j.at("inputs").get<std::vector<FileDigest>>();
  m.outputs = j.at("outputs").get<std::vector<FileDigest>>();
  j.at("started_at").get_to(m.started_at);
  j.at("finished_at").get_to(m.finished_at);
  m.seed.reset();
  if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << nlohmann::json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j.get<RunManifest>();
}

}  // namespace termkit
