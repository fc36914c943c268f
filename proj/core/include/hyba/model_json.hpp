#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "hyba/mlp.hpp"

namespace hyba {

/// {input_dim, num_classes, layers:[{rows, cols, weights, bias, activation}]}
nlohmann::json model_to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& doc);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

/// FNV-1a of the serialized model; stable across runs.
std::uint64_t model_hash(const MlpModel& model);

}  // namespace hyba
