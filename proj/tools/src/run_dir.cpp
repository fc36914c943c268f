#include "run_dir.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>

#include "config.hpp"
#include "hyba/error.hpp"
#include "hyba/results.hpp"

namespace hyba::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path make_run_dir(const std::string& command, const std::optional<fs::path>& explicit_dir) {
  fs::path dir;
  if (explicit_dir) {
    dir = *explicit_dir;
  } else {
    const char* root = std::getenv("HYBA_RUN_ROOT");
    std::string stamp = utc_now();
    std::erase(stamp, ':');
    std::erase(stamp, '-');
    const fs::path base = fs::path(root && *root ? root : "runs") / (command + "-" + stamp);
    dir = base;
    for (int n = 2; fs::exists(dir); ++n) dir = base.string() + "-" + std::to_string(n);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ArtifactError("cannot create run directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_manifest(const fs::path& run_dir, const Manifest& m) {
  json outputs = json::array();
  for (const auto& e : fs::recursive_directory_iterator(run_dir))
    if (e.is_regular_file() && e.path().filename() != kManifestFile)
      outputs.push_back(fs::relative(e.path(), run_dir).generic_string());
  std::sort(outputs.begin(), outputs.end());
  const json doc = {
      {"command", m.command},
      {"config_hash", config_hash(m.config)},
      {"master_seed", m.config.at("seed")},
      {"config", m.config},
      {"inputs", m.inputs},
      {"versions",
       {{"hyba", HYBA_VERSION},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                 std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                 std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"compiler", __VERSION__}}},
      {"started_at", m.started_at},
      {"finished_at", utc_now()},
      {"output_dir", fs::absolute(run_dir).lexically_normal().string()},
      {"outputs", outputs},
  };
  write_text_file(run_dir / kManifestFile, doc.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  try {
    m.command = doc.at("command").get<std::string>();
    m.config = doc.at("config");
    m.inputs = doc.at("inputs");
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  validate_config(m.config);
  if (config_hash(m.config) != doc.value("config_hash", ""))
    throw ParseError("manifest " + path.string() + ": config does not match its hash");
  return m;
}

}  // namespace hyba::cli
