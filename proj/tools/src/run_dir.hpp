#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace hyba::cli {

inline constexpr const char* kManifestFile = "manifest.json";

/// `explicit_dir` when given, otherwise a fresh
/// `$HYBA_RUN_ROOT/<command>-<UTC timestamp>[-N]` directory (root defaults to
/// ./runs). The directory is created.
std::filesystem::path make_run_dir(const std::string& command,
                                   const std::optional<std::filesystem::path>& explicit_dir);

/// Everything needed to rerun a command. Written last, so a run directory
/// with a manifest is complete.
struct Manifest {
  std::string command;
  nlohmann::json config;
  /// Input artifacts by role, e.g. {"models": "/path/to/train-run"}.
  nlohmann::json inputs = nlohmann::json::object();
  std::string started_at;
};

std::string utc_now();

void write_manifest(const std::filesystem::path& run_dir, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace hyba::cli
