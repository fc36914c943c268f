#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hyba::cli {

/// Each command reads its frozen config and input artifacts and writes its
/// outputs under `out`. `inputs` holds absolute artifact paths by role.
void cmd_train(const nlohmann::json& cfg, const std::filesystem::path& out);
void cmd_attack(const nlohmann::json& cfg, const nlohmann::json& inputs,
                const std::filesystem::path& out);
void cmd_batch(const nlohmann::json& cfg, const nlohmann::json& inputs,
               const std::filesystem::path& out);
void cmd_report(const nlohmann::json& cfg, const nlohmann::json& inputs,
                const std::filesystem::path& out);

/// The dataset section a models directory was trained with.
nlohmann::json trained_dataset(const std::filesystem::path& models_dir);

void run_command(const std::string& command, const nlohmann::json& cfg,
                 const nlohmann::json& inputs, const std::filesystem::path& out);

}  // namespace hyba::cli
