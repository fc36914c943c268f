#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "hyba/error.hpp"
#include "run_dir.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hyba;
using namespace hyba::cli;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kArtifact = 3 };

struct Overrides {
  std::optional<std::string> estimator, start, tune, strategies, phase1_metric;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> max_queries, seed;
  std::optional<int> samples;
  std::optional<std::size_t> per_class;
};

void add_attack_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--estimator", o.estimator, "Gradient estimator")
      ->check(CLI::IsMember({"zoo", "autozoom", "nes"}));
  cmd->add_option("--start", o.start, "Starting point of the optimization attack")
      ->check(CLI::IsMember({"seed", "candidate"}));
  cmd->add_option("--epsilon", o.epsilon, "L-infinity radius")->check(CLI::PositiveNumber);
  cmd->add_option("--max-queries", o.max_queries, "Per-seed query budget")->check(CLI::PositiveNumber);
  cmd->add_option("--samples", o.samples, "Estimator sample count");
  cmd->add_option("--per-class", o.per_class, "Seeds per class in the pool");
}

json with_overrides(json cfg, const Overrides& o) {
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.estimator) cfg["attack"]["estimator"] = *o.estimator;
  if (o.start) cfg["attack"]["start"] = *o.start;
  if (o.tune) cfg["attack"]["tune"] = *o.tune == "on";
  if (o.epsilon) cfg["attack"]["epsilon"] = *o.epsilon;
  if (o.max_queries) cfg["attack"]["max_queries"] = *o.max_queries;
  if (o.samples) cfg["attack"]["samples"] = *o.samples;
  if (o.per_class) cfg["pool"]["per_class"] = *o.per_class;
  if (o.phase1_metric) cfg["batch"]["phase1_metric"] = *o.phase1_metric;
  if (o.strategies) {
    json list = json::array();
    std::string s = *o.strategies;
    for (std::size_t pos = 0; pos <= s.size();) {
      const auto comma = std::min(s.find(',', pos), s.size());
      list.push_back(s.substr(pos, comma - pos));
      pos = comma + 1;
    }
    cfg["batch"]["strategies"] = list;
  }
  validate_config(cfg);
  return cfg;
}

std::string abs_path(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

int execute(const std::string& command, const json& cfg, const json& inputs,
            const std::optional<fs::path>& out) {
  Manifest m{command, cfg, inputs, utc_now()};
  const bool existed = out && fs::exists(*out);
  const fs::path dir = make_run_dir(command, out);
  try {
    run_command(command, cfg, inputs, dir);
  } catch (...) {
    std::error_code ec;
    if (!existed) fs::remove_all(dir, ec);
    throw;
  }
  write_manifest(dir, m);
  std::cerr << "run directory: " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid black-box adversarial attacks: train models, attack seed pools, "
               "compare batch schedules and merge reports."};
  app.require_subcommand(1);
  std::optional<fs::path> config_path, out, models, costs, manifest_path;
  std::vector<fs::path> run_dirs;
  Overrides o;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config; flags override its fields")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Run directory (default: $HYBA_RUN_ROOT/<command>-<timestamp>)");
    cmd->add_option("--seed", o.seed, "Master seed");
  };
  auto* train = app.add_subcommand("train", "Train the target and local models");
  common(train);

  auto* attack = app.add_subcommand("attack", "Run the baseline or hybrid attack over a seed pool");
  common(attack);
  add_attack_flags(attack, o);
  attack->add_option("--tune", o.tune, "Fine-tune local models on byproducts")
      ->check(CLI::IsMember({"on", "off"}));
  attack->add_option("--models", models, "Directory written by `hyba train`")->required();

  auto* batch = app.add_subcommand("batch", "Compare batch-attack orderings over one pool");
  common(batch);
  add_attack_flags(batch, o);
  batch->add_option("--models", models, "Directory written by `hyba train`")->required();
  batch->add_option("--strategies", o.strategies,
                    "Comma-separated subset of two_phase,random,retro_optimal,loss_only");
  batch->add_option("--phase1-metric", o.phase1_metric, "Transfer-check ordering metric");
  batch->add_option("--costs", costs, "outcomes.csv whose costs retro_optimal replays");

  auto* report = app.add_subcommand("report", "Merge attack or batch runs into comparison tables");
  common(report);
  report->add_option("runs", run_dirs, "Run directories")->required();

  auto* replay = app.add_subcommand("replay", "Rerun a command from its manifest");
  replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  replay->add_option("--out", out, "Run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (replay->parsed()) {
      const auto m = read_manifest(*manifest_path);
      return execute(m.command, m.config, m.inputs, out);
    }
    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    json cfg = config_path ? load_config(*config_path) : merge_config(json::object(), fs::current_path());
    json inputs = json::object();
    if (models) {
      inputs["models"] = abs_path(*models);
      cfg["dataset"] = trained_dataset(*models);
    }
    if (costs) inputs["costs"] = abs_path(*costs);
    if (!run_dirs.empty()) {
      inputs["runs"] = json::array();
      for (const auto& d : run_dirs) inputs["runs"].push_back(abs_path(d));
    }
    cfg = with_overrides(std::move(cfg), o);
    return execute(name, cfg, inputs, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kArtifact;
  } catch (const ParseError& e) {
    std::cerr << "malformed artifact: " << e.what() << '\n';
    return kArtifact;
  } catch (const json::exception& e) {
    std::cerr << "malformed artifact: " << e.what() << '\n';
    return kArtifact;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
