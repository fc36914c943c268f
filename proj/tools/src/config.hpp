#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyba/blackbox.hpp"
#include "hyba/datasets.hpp"
#include "hyba/hybrid.hpp"
#include "hyba/mlp.hpp"
#include "hyba/scheduler.hpp"
#include "hyba/whitebox.hpp"

namespace hyba::cli {

/// Every recognised key with its default value. User configs may only
/// narrow this tree; unknown keys are rejected.
nlohmann::json default_config();

/// Merges `user` over the defaults. Relative dataset paths are resolved
/// against `base_dir`. Throws ConfigError on unknown keys or type mismatches.
nlohmann::json merge_config(const nlohmann::json& user, const std::filesystem::path& base_dir);

/// Reads a JSON config file and merges it over the defaults.
nlohmann::json load_config(const std::filesystem::path& path);

/// Checks value ranges and enumerations of a merged config.
void validate_config(const nlohmann::json& cfg);

std::string config_hash(const nlohmann::json& cfg);

struct Dataset {
  std::string id;
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> heldout;
  std::vector<std::uint64_t> heldout_ids;
};

Dataset load_dataset(const nlohmann::json& cfg);

TrainConfig target_train_config(const nlohmann::json& cfg);
TrainConfig local_train_config(const nlohmann::json& cfg, std::size_t index);
std::vector<std::size_t> target_widths(const nlohmann::json& cfg, std::size_t dim, int classes);
std::vector<std::vector<std::size_t>> local_widths(const nlohmann::json& cfg, std::size_t dim,
                                                   int classes);

SeedPoolConfig pool_config(const nlohmann::json& cfg, const std::string& dataset_id);
PgdConfig pgd_config(const nlohmann::json& cfg);
BlackboxConfig blackbox_config(const nlohmann::json& cfg);
HybridConfig hybrid_config(const nlohmann::json& cfg);
std::vector<BatchStrategy> batch_strategies(const nlohmann::json& cfg);

}  // namespace hyba::cli
