#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace cavity::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct ManifestFile {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;

  bool operator==(const ManifestFile&) const = default;
};

/// Everything needed to reproduce a run. Timestamps live here only, never in
/// the data files.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> defaults_applied;
  int field_modes = 0;
  int normal_modes = 0;
  double tail_bound = 0.0;
  std::string tool_version = kToolVersion;
  std::string started_at;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
  std::vector<ManifestFile> files;

  bool operator==(const RunManifest&) const = default;
};

inline void to_json(nlohmann::json& j, const ManifestFile& f) {
  j = nlohmann::json{{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}};
}

inline void from_json(const nlohmann::json& j, ManifestFile& f) {
  j.at("name").get_to(f.name);
  j.at("sha256").get_to(f.sha256);
  j.at("bytes").get_to(f.bytes);
}

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"command", m.command},
                     {"config", m.config},
                     {"defaults_applied", m.defaults_applied},
                     {"truncation", {{"field_modes", m.field_modes}, {"normal_modes", m.normal_modes}}},
                     {"tail_bound", m.tail_bound},
                     {"tool_version", m.tool_version},
                     {"started_at", m.started_at},
                     {"wall_seconds", m.wall_seconds},
                     {"warnings", m.warnings},
                     {"files", m.files}};
}

inline void from_json(const nlohmann::json& j, RunManifest& m) {
  j.at("command").get_to(m.command);
  m.config = j.at("config");
  j.at("defaults_applied").get_to(m.defaults_applied);
  j.at("truncation").at("field_modes").get_to(m.field_modes);
  j.at("truncation").at("normal_modes").get_to(m.normal_modes);
  j.at("tail_bound").get_to(m.tail_bound);
  j.at("tool_version").get_to(m.tool_version);
  j.at("started_at").get_to(m.started_at);
  j.at("wall_seconds").get_to(m.wall_seconds);
  j.at("warnings").get_to(m.warnings);
  j.at("files").get_to(m.files);
}

inline std::string serialize(const RunManifest& m) { return nlohmann::json(m).dump(2) + "\n"; }

inline RunManifest parse_manifest(const std::string& text) {
  return nlohmann::json::parse(text).get<RunManifest>();
}

}  // namespace cavity::cli
