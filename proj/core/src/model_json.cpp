#include "hyba/model_json.hpp"

#include <fstream>
#include <sstream>

#include "hyba/error.hpp"
#include "hyba/rng.hpp"

namespace hyba {
namespace {

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ParseError("model json: unknown activation '" + name + "'");
}

}  // namespace

nlohmann::json model_to_json(const MlpModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& L : model.layers()) {
    layers.push_back({{"rows", L.rows},
                      {"cols", L.cols},
                      {"weights", L.weights},
                      {"bias", L.bias},
                      {"activation", activation_name(L.activation)}});
  }
  return {{"input_dim", model.input_dim()},
          {"num_classes", model.num_classes()},
          {"layers", std::move(layers)}};
}

MlpModel model_from_json(const nlohmann::json& doc) {
  try {
    std::vector<DenseLayer> layers;
    for (const auto& jl : doc.at("layers")) {
      DenseLayer L;
      L.rows = jl.at("rows").get<std::size_t>();
      L.cols = jl.at("cols").get<std::size_t>();
      L.weights = jl.at("weights").get<std::vector<double>>();
      L.bias = jl.at("bias").get<std::vector<double>>();
      L.activation = activation_from(jl.at("activation").get<std::string>());
      layers.push_back(std::move(L));
    }
    MlpModel model(std::move(layers));
    if (model.input_dim() != doc.at("input_dim").get<std::size_t>() ||
        model.num_classes() != doc.at("num_classes").get<int>()) {
      throw ParseError("model json: header dimensions disagree with layers");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what());
  }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write model file " + path.string());
  out << model_to_json(model).dump() << '\n';
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read model file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

std::uint64_t model_hash(const MlpModel& model) { return fnv1a64(model_to_json(model).dump()); }

}  // namespace hyba
