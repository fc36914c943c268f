#include "config.hpp"

#include <fstream>
#include <set>

#include "hyba/error.hpp"
#include "hyba/idx.hpp"
#include "hyba/rng.hpp"

namespace hyba::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Object keys that may be switched off with null.
const std::set<std::string> kNullable = {"/models/target/adversarial"};

std::string type_name(const json& j) {
  if (j.is_number()) return "number";
  return j.type_name();
}

bool compatible(const json& def, const json& user) {
  if (def.is_number_integer()) return user.is_number_integer() && (!def.is_number_unsigned() || user >= 0);
  if (def.is_number()) return user.is_number();
  return def.type() == user.type();
}

void merge_into(json& def, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config" + path + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string here = path + "/" + key;
    if (!def.contains(key)) throw ConfigError("config: unknown key " + here);
    json& slot = def[key];
    if (slot.is_object() || (slot.is_null() && kNullable.count(here))) {
      if (value.is_null() && kNullable.count(here)) {
        slot = nullptr;
        continue;
      }
      if (slot.is_null()) slot = default_config().at(json::json_pointer(here));
      merge_into(slot, value, here);
      continue;
    }
    if (!compatible(slot, value))
      throw ConfigError("config: " + here + " must be a " + type_name(slot) + ", got " +
                        type_name(value));
    slot = value;
  }
}

template <class T>
T get(const json& cfg, const char* pointer) {
  try {
    return cfg.at(json::json_pointer(pointer)).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + pointer + ": " + e.what());
  }
}

std::vector<std::size_t> widths_of(const json& hidden, std::size_t dim, int classes) {
  std::vector<std::size_t> w{dim};
  for (const auto& h : hidden) {
    if (!h.is_number_unsigned() || h.get<std::size_t>() == 0)
      throw ConfigError("config: hidden layer widths must be positive integers");
    w.push_back(h.get<std::size_t>());
  }
  w.push_back(static_cast<std::size_t>(classes));
  return w;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

json default_config() {
  return {
      {"seed", 1},
      {"dataset",
       {{"kind", "mnist"},
        {"images", std::string(HYBA_DATA_DIR) + "/mnist5k/images-idx3-ubyte"},
        {"labels", std::string(HYBA_DATA_DIR) + "/mnist5k/labels-idx1-ubyte"},
        {"downsample", true},
        {"n", 1000},
        {"classes", 10},
        {"dim", 16},
        {"separation", 2.0},
        {"train_fraction", 0.7},
        {"split_seed", 1}}},
      {"models",
       {{"target",
         {{"hidden", {64}},
          {"epochs", 15},
          {"learning_rate", 0.1},
          {"batch_size", 32},
          {"adversarial", {{"epsilon", 0.1}, {"step_size", 0.1 / 3}, {"steps", 3}, {"mix", 0.5}}}}},
        {"locals",
         {{"count", 3},
          {"hidden", json::array({json::array({32}), json::array({64}), json::array({96})})},
          {"epochs", 20},
          {"learning_rate", 0.1},
          {"batch_size", 32}}}}},
      {"pool", {{"per_class", 20}, {"targeted", false}, {"screen_with_locals", true}}},
      {"attack",
       {{"estimator", "nes"},
        {"start", "candidate"},
        {"tune", false},
        {"epsilon", 0.3},
        {"max_queries", 2000},
        {"samples", 50},
        {"delta", 0.01},
        {"step_size", 0.01},
        {"pgd", {{"step_size", 0.01}, {"steps", 200}, {"loss", "margin"}}},
        {"tuning",
         {{"period", 50},
          {"threshold", 60000},
          {"epochs", 1},
          {"learning_rate", 0.01},
          {"batch_size", 32}}}}},
      {"batch",
       {{"strategies", {"two_phase", "random", "retro_optimal", "loss_only"}},
        {"phase1_metric", "combined"}}},
  };
}

json merge_config(const json& user, const fs::path& base_dir) {
  json cfg = default_config();
  merge_into(cfg, user, "");
  for (const char* key : {"images", "labels"}) {
    fs::path p = cfg["dataset"][key].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    cfg["dataset"][key] = p.lexically_normal().string();
  }
  validate_config(cfg);
  return cfg;
}

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json user;
  try {
    user = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return merge_config(user, fs::absolute(path).parent_path());
}

void validate_config(const json& cfg) {
  const auto kind = get<std::string>(cfg, "/dataset/kind");
  require(kind == "mnist" || kind == "synthetic", "dataset.kind must be mnist or synthetic");
  const double frac = get<double>(cfg, "/dataset/train_fraction");
  require(frac > 0.0 && frac < 1.0, "dataset.train_fraction must lie in (0, 1)");
  const auto& locals = cfg.at("models").at("locals");
  const auto& hidden = locals.at("hidden");
  const auto count = get<std::size_t>(cfg, "/models/locals/count");
  require(hidden.is_array(), "models.locals.hidden must be an array");
  if (!hidden.empty() && hidden.front().is_array())
    require(hidden.size() == count,
            "models.locals.hidden lists one width list per local model; count disagrees");
  require(get<double>(cfg, "/attack/epsilon") > 0.0, "attack.epsilon must be positive");
  require(get<std::uint64_t>(cfg, "/attack/max_queries") > 0, "attack.max_queries must be positive");
  const auto start = get<std::string>(cfg, "/attack/start");
  require(start == "seed" || start == "candidate", "attack.start must be seed or candidate");
  const auto loss = get<std::string>(cfg, "/attack/pgd/loss");
  require(loss == "margin" || loss == "cross_entropy",
          "attack.pgd.loss must be margin or cross_entropy");
  estimator_from_string(get<std::string>(cfg, "/attack/estimator"));
  phase1_metric_from_string(get<std::string>(cfg, "/batch/phase1_metric"));
  batch_strategies(cfg);
  pgd_config(cfg).validate();
  blackbox_config(cfg).validate();
  hybrid_config(cfg).validate();
}

std::string config_hash(const json& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.dump())));
  return buf;
}

Dataset load_dataset(const json& cfg) {
  std::vector<LabeledExample> all;
  Dataset d;
  if (get<std::string>(cfg, "/dataset/kind") == "mnist") {
    all = load_idx(get<std::string>(cfg, "/dataset/images"), get<std::string>(cfg, "/dataset/labels"));
    const bool down = get<bool>(cfg, "/dataset/downsample");
    if (down) all = downsample_2x2(all);
    d.id = fs::path(get<std::string>(cfg, "/dataset/images")).parent_path().filename().string() +
           (down ? "-downsampled" : "");
  } else {
    const auto n = get<std::size_t>(cfg, "/dataset/n");
    const int classes = get<int>(cfg, "/dataset/classes");
    const auto dim = get<std::size_t>(cfg, "/dataset/dim");
    all = make_synthetic(n, classes, dim, get<double>(cfg, "/dataset/separation"),
                         get<std::uint64_t>(cfg, "/dataset/split_seed"));
    d.id = "synthetic-" + std::to_string(n) + "x" + std::to_string(dim) + "-" + std::to_string(classes);
  }
  const auto split = split_indices(all.size(), get<double>(cfg, "/dataset/train_fraction"),
                                   get<std::uint64_t>(cfg, "/dataset/split_seed"));
  d.train = select(all, split.train);
  d.heldout = select(all, split.heldout);
  d.heldout_ids.assign(split.heldout.begin(), split.heldout.end());
  return d;
}

TrainConfig target_train_config(const json& cfg) {
  const auto& t = cfg.at("models").at("target");
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  TrainConfig tc;
  tc.epochs = t.at("epochs").get<int>();
  tc.learning_rate = t.at("learning_rate").get<double>();
  tc.batch_size = t.at("batch_size").get<std::size_t>();
  tc.rng_seed = derive_seed(seed, 2);
  if (!t.at("adversarial").is_null()) {
    const auto& a = t.at("adversarial");
    tc.adversarial = AdversarialTraining{a.at("epsilon").get<double>(), a.at("step_size").get<double>(),
                                         a.at("steps").get<int>(), a.at("mix").get<double>()};
  }
  return tc;
}

TrainConfig local_train_config(const json& cfg, std::size_t index) {
  const auto& l = cfg.at("models").at("locals");
  TrainConfig tc;
  tc.epochs = l.at("epochs").get<int>();
  tc.learning_rate = l.at("learning_rate").get<double>();
  tc.batch_size = l.at("batch_size").get<std::size_t>();
  tc.rng_seed = derive_seed(get<std::uint64_t>(cfg, "/seed"), 20 + index);
  return tc;
}

std::vector<std::size_t> target_widths(const json& cfg, std::size_t dim, int classes) {
  return widths_of(cfg.at("models").at("target").at("hidden"), dim, classes);
}

std::vector<std::vector<std::size_t>> local_widths(const json& cfg, std::size_t dim, int classes) {
  const auto& l = cfg.at("models").at("locals");
  const auto count = l.at("count").get<std::size_t>();
  const auto& hidden = l.at("hidden");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < count; ++i) {
    const bool per_model = !hidden.empty() && hidden.front().is_array();
    out.push_back(widths_of(per_model ? hidden.at(i) : hidden, dim, classes));
  }
  return out;
}

SeedPoolConfig pool_config(const json& cfg, const std::string& dataset_id) {
  SeedPoolConfig pc;
  pc.per_class = get<std::size_t>(cfg, "/pool/per_class");
  pc.targeted = get<bool>(cfg, "/pool/targeted");
  pc.sampling_seed = get<std::uint64_t>(cfg, "/seed");
  pc.dataset_id = dataset_id;
  return pc;
}

PgdConfig pgd_config(const json& cfg) {
  PgdConfig p;
  p.epsilon = get<double>(cfg, "/attack/epsilon");
  p.step_size = get<double>(cfg, "/attack/pgd/step_size");
  p.max_steps = get<int>(cfg, "/attack/pgd/steps");
  p.loss = get<std::string>(cfg, "/attack/pgd/loss") == "margin" ? PerModelLoss::margin
                                                                  : PerModelLoss::cross_entropy;
  return p;
}

BlackboxConfig blackbox_config(const json& cfg) {
  BlackboxConfig b;
  b.estimator = estimator_from_string(get<std::string>(cfg, "/attack/estimator"));
  b.epsilon = get<double>(cfg, "/attack/epsilon");
  b.max_queries = get<std::uint64_t>(cfg, "/attack/max_queries");
  b.samples = get<int>(cfg, "/attack/samples");
  b.delta = get<double>(cfg, "/attack/delta");
  b.step_size = get<double>(cfg, "/attack/step_size");
  return b;
}

HybridConfig hybrid_config(const json& cfg) {
  HybridConfig h;
  h.start_from_candidate = get<std::string>(cfg, "/attack/start") == "candidate";
  h.tune_enabled = get<bool>(cfg, "/attack/tune");
  h.tune_period = get<int>(cfg, "/attack/tuning/period");
  h.tune_threshold_c = get<std::size_t>(cfg, "/attack/tuning/threshold");
  h.tune_epochs = get<int>(cfg, "/attack/tuning/epochs");
  h.tune_learning_rate = get<double>(cfg, "/attack/tuning/learning_rate");
  h.tune_batch_size = get<std::size_t>(cfg, "/attack/tuning/batch_size");
  h.rng_seed = get<std::uint64_t>(cfg, "/seed");
  return h;
}

std::vector<BatchStrategy> batch_strategies(const json& cfg) {
  std::vector<BatchStrategy> out;
  for (const auto& s : cfg.at("batch").at("strategies")) {
    if (!s.is_string()) throw ConfigError("config: batch.strategies must be strings");
    out.push_back(batch_strategy_from_string(s.get<std::string>()));
  }
  require(!out.empty(), "batch.strategies is empty");
  return out;
}

}  // namespace hyba::cli
