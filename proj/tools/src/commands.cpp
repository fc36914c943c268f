#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "config.hpp"
#include "hyba/error.hpp"
#include "hyba/hybrid.hpp"
#include "hyba/model_json.hpp"
#include "hyba/oracle.hpp"
#include "hyba/results.hpp"
#include "hyba/rng.hpp"
#include "hyba/scheduler.hpp"

namespace hyba::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSummaryFile = "summary.json";
constexpr const char* kBatchFile = "batch.json";

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int num_classes(const std::vector<LabeledExample>& data) {
  int top = 0;
  for (const auto& ex : data) top = std::max(top, ex.label);
  return top + 1;
}

std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Models {
  MlpModel target;
  std::vector<MlpModel> locals;
};

Models load_models(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ArtifactError("models directory not found: " + dir.string());
  const json cfg = json::parse(read_text_file(dir / kConfigFile));
  Models m{load_model(dir / "models" / "target.json"), {}};
  const auto count = cfg.at("models").at("locals").at("count").get<std::size_t>();
  for (std::size_t i = 0; i < count; ++i)
    m.locals.push_back(load_model(dir / "models" / ("local_" + std::to_string(i) + ".json")));
  return m;
}

fs::path input_path(const json& inputs, const char* role) {
  if (!inputs.contains(role)) throw ConfigError(std::string("missing input: ") + role);
  return inputs.at(role).get<std::string>();
}

SeedPool make_pool(const json& cfg, const Dataset& ds, const Models& m) {
  std::span<const MlpModel> screen;
  if (cfg.at("pool").at("screen_with_locals").get<bool>()) screen = m.locals;
  auto pool = build_seed_pool(ds.heldout, ds.heldout_ids, m.target, pool_config(cfg, ds.id), screen);
  if (!pool.short_classes.empty()) {
    std::cerr << "warning: fewer than " << cfg.at("pool").at("per_class") << " seeds for class";
    for (int c : pool.short_classes) std::cerr << ' ' << c;
    std::cerr << '\n';
  }
  if (pool.seeds.empty()) throw ConfigError("seed pool is empty");
  return pool;
}

json model_record(const MlpModel& m, double train_acc, const Dataset& ds) {
  return {{"hash", hex(model_hash(m))},
          {"train_accuracy", train_acc},
          {"heldout_accuracy", accuracy(m, ds.heldout)}};
}

}  // namespace

json trained_dataset(const fs::path& models_dir) {
  const auto path = models_dir / kConfigFile;
  if (!fs::exists(path)) throw ArtifactError("not a train run (no config.json): " + models_dir.string());
  return json::parse(read_text_file(path)).at("dataset");
}

void cmd_train(const json& cfg, const fs::path& out) {
  const auto ds = load_dataset(cfg);
  if (ds.train.empty()) throw ConfigError("training split is empty");
  const std::size_t dim = ds.train.front().image.size();
  const int classes = num_classes(ds.train);
  const auto seed = cfg.at("seed").get<std::uint64_t>();

  const auto tw = target_widths(cfg, dim, classes);
  auto target = train_sgd(MlpModel::glorot(tw, derive_seed(seed, 1)), ds.train, target_train_config(cfg));
  save_model(target.model, out / "models" / "target.json");
  json report = {{"dataset", ds.id},
                 {"train_examples", ds.train.size()},
                 {"heldout_examples", ds.heldout.size()},
                 {"target", model_record(target.model, target.train_accuracy, ds)},
                 {"locals", json::array()}};

  const auto lw = local_widths(cfg, dim, classes);
  const auto order = split_indices(ds.train.size(), 1.0, derive_seed(seed, 3)).train;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    const std::size_t part = ds.train.size() / lw.size();
    std::vector<std::size_t> idx(order.begin() + static_cast<long>(i * part),
                                 order.begin() + static_cast<long>((i + 1) * part));
    auto local = train_sgd(MlpModel::glorot(lw[i], derive_seed(seed, 10 + i)),
                           select(ds.train, idx), local_train_config(cfg, i));
    save_model(local.model, out / "models" / ("local_" + std::to_string(i) + ".json"));
    report["locals"].push_back(model_record(local.model, local.train_accuracy, ds));
  }
  write_text_file(out / "accuracy.json", report.dump(2) + "\n");
  write_text_file(out / kConfigFile, cfg.dump(2) + "\n");

  std::cout << "model      train   heldout  hash\n";
  auto row = [](const std::string& name, const json& r) {
    std::printf("%-9s  %.3f   %.3f    %s\n", name.c_str(), r["train_accuracy"].get<double>(),
                r["heldout_accuracy"].get<double>(), r["hash"].get<std::string>().c_str());
  };
  row("target", report["target"]);
  for (std::size_t i = 0; i < report["locals"].size(); ++i)
    row("local_" + std::to_string(i), report["locals"][i]);
}

void cmd_attack(const json& cfg, const json& inputs, const fs::path& out) {
  const auto models = load_models(input_path(inputs, "models"));
  if (models.locals.empty()) throw ConfigError("attack needs at least one local model");
  const auto ds = load_dataset(cfg);
  const auto pool = make_pool(cfg, ds, models);
  const auto bb = blackbox_config(cfg);
  const auto hc = hybrid_config(cfg);

  QueryLedger ledger;
  auto result = run_hybrid(pool.seeds, models.locals, QueryOracle(models.target, ledger), goal_for,
                           pgd_config(cfg), bb, hc);

  const std::string strategy =
      hc.start_from_candidate || hc.tune_enabled ? "hybrid" : "baseline";
  RunResults rr;
  rr.config = cfg;
  for (const auto& o : result.outcomes)
    rr.outcomes.push_back({o.seed_id, o.found_by, o.success, o.queries_used, strategy,
                           std::string(to_string(bb.estimator)), bb.epsilon, hc.rng_seed});
  const auto s = summarize(rr.outcomes);
  if (s.total_queries != ledger.total())
    throw Error("query accounting mismatch: outcomes " + std::to_string(s.total_queries) +
                " vs ledger " + std::to_string(ledger.total()));
  write_results(out, rr);
  json summary = to_json(s);
  summary["strategy"] = strategy;
  summary["estimator"] = std::string(to_string(bb.estimator));
  summary["excluded_seeds"] = result.excluded;
  summary["tuning_rounds"] = result.tuning_rounds;
  summary["tuning_set_size"] = result.tuning_set_size;
  write_text_file(out / kSummaryFile, summary.dump(2) + "\n");
  if (hc.tune_enabled)
    for (std::size_t i = 0; i < result.local_models.size(); ++i)
      save_model(result.local_models[i], out / "tuned" / ("local_" + std::to_string(i) + ".json"));

  std::printf("%s / %s over %zu seeds (%s)\n", strategy.c_str(), summary["estimator"].get<std::string>().c_str(),
              s.seeds, ds.id.c_str());
  std::printf("  success      %.1f%%\n", 100.0 * s.success_rate);
  std::printf("  transfers    %zu\n", s.direct_transfers);
  std::printf("  queries      %llu\n", static_cast<unsigned long long>(s.total_queries));
  std::printf("  queries/seed %s\n", fixed(s.queries_per_seed, 1).c_str());
  std::printf("  queries/AE   %s\n", s.aes ? fixed(s.queries_per_ae, 1).c_str() : "n/a");
  std::printf("  queries/search %s\n", fixed(s.queries_per_search, 1).c_str());
}

void cmd_batch(const json& cfg, const json& inputs, const fs::path& out) {
  const auto models = load_models(input_path(inputs, "models"));
  if (models.locals.empty()) throw ConfigError("batch needs at least one local model");
  const auto ds = load_dataset(cfg);
  const auto pool = make_pool(cfg, ds, models);
  const auto strategies = batch_strategies(cfg);

  BatchConfig bc;
  bc.phase1_metric = phase1_metric_from_string(cfg.at("batch").at("phase1_metric").get<std::string>());
  bc.start_from_candidate = cfg.at("attack").at("start").get<std::string>() == "candidate";
  bc.run_seed = cfg.at("seed").get<std::uint64_t>();
  bc.pgd = pgd_config(cfg);
  bc.blackbox = blackbox_config(cfg);

  std::optional<CostTable> costs;
  if (inputs.contains("costs")) {
    costs.emplace();
    for (const auto& r : read_outcomes_csv(input_path(inputs, "costs")))
      costs->emplace(r.seed_id, SeedCost{r.queries_used, r.success});
  }
  std::map<BatchStrategy, BatchReport> reports;
  for (auto s : strategies) {
    if (s == BatchStrategy::retro_optimal || reports.count(s)) continue;
    bc.strategy = s;
    QueryLedger ledger;
    auto r = run_batch(pool.seeds, models.locals, QueryOracle(models.target, ledger), goal_for, bc);
    if (r.total_queries != ledger.total()) throw Error("query accounting mismatch in " + std::string(to_string(s)));
    if (!costs) costs = r.cost_table();
    reports.emplace(s, std::move(r));
  }
  if (std::count(strategies.begin(), strategies.end(), BatchStrategy::retro_optimal)) {
    if (!costs)
      throw ArtifactError("retro_optimal needs a cost table: run another strategy alongside it or pass --costs");
    bc.strategy = BatchStrategy::retro_optimal;
    QueryLedger unused;
    reports.emplace(BatchStrategy::retro_optimal,
                    run_batch(pool.seeds, models.locals, QueryOracle(models.target, unused), goal_for, bc, &*costs));
  }

  std::vector<BatchReport> ordered;
  RunResults rr;
  rr.config = cfg;
  json doc = {{"dataset", ds.id}, {"seeds", pool.seeds.size()}, {"reports", json::array()}};
  std::string top = "strategy,percent,queries\n";
  for (auto s : strategies) {
    if (std::any_of(ordered.begin(), ordered.end(), [&](const BatchReport& r) { return r.strategy == s; }))
      continue;
    const auto& r = reports.at(s);
    ordered.push_back(r);
    doc["reports"].push_back(to_json(r));
    for (const auto& [pct, q] : r.queries_to_top)
      top += std::string(to_string(s)) + "," + format_double(pct) + "," + (q ? std::to_string(*q) : "") + "\n";
    for (const auto& ps : r.per_seed)
      rr.outcomes.push_back({ps.seed_id, ps.found_by, ps.success, ps.queries, std::string(to_string(s)),
                             std::string(to_string(bc.blackbox.estimator)), bc.blackbox.epsilon, bc.run_seed});
  }
  write_results(out, rr);
  write_text_file(out / kBatchFile, doc.dump(2) + "\n");
  write_curve_csv(out / "curves.csv", ordered);
  write_text_file(out / "top_percent.csv", top);

  std::printf("%zu seeds, queries to reach the top x%% of AEs\n", pool.seeds.size());
  std::printf("%-14s", "strategy");
  for (double p : kTopPercents) std::printf("%10s", (format_double(p) + "%").c_str());
  std::printf("%10s%10s\n", "AEs", "queries");
  for (const auto& r : ordered) {
    std::printf("%-14s", std::string(to_string(r.strategy)).c_str());
    for (double p : kTopPercents) {
      const auto q = r.queries_to_top.at(p);
      std::printf("%10s", q ? std::to_string(*q).c_str() : "-");
    }
    std::printf("%10llu%10llu\n", static_cast<unsigned long long>(r.aes_found),
                static_cast<unsigned long long>(r.total_queries));
  }
}

namespace {

struct Stat {
  std::vector<double> values;
  bool missing = false;
  void add(std::optional<double> v) {
    if (v) values.push_back(*v);
    else missing = true;
  }
  double mean() const {
    double s = 0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  double stdev() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double s = 0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(values.size() - 1));
  }
  bool ok() const { return !missing && !values.empty(); }
};

struct Table {
  std::vector<std::string> keys;
  std::vector<std::string> metrics;
  std::map<std::vector<std::string>, std::pair<std::size_t, std::vector<Stat>>> groups;

  void add(const std::vector<std::string>& key, const std::vector<std::optional<double>>& row) {
    auto& [runs, stats] = groups[key];
    stats.resize(metrics.size());
    ++runs;
    for (std::size_t i = 0; i < row.size(); ++i) stats[i].add(row[i]);
  }

  std::string csv() const {
    std::string text;
    for (const auto& k : keys) text += k + ",";
    text += "runs";
    for (const auto& m : metrics) text += "," + m + "_mean," + m + "_std";
    text += "\n";
    for (const auto& [key, g] : groups) {
      for (const auto& k : key) text += csv_escape(k) + ",";
      text += std::to_string(g.first);
      for (const auto& s : g.second)
        text += s.ok() ? "," + format_double(s.mean()) + "," + format_double(s.stdev()) : ",,";
      text += "\n";
    }
    return text;
  }

  std::string markdown() const {
    std::string text = "|";
    for (const auto& k : keys) text += " " + k + " |";
    text += " runs |";
    for (const auto& m : metrics) text += " " + m + " |";
    text += "\n|";
    for (std::size_t i = 0; i < keys.size() + metrics.size() + 1; ++i) text += "---|";
    text += "\n";
    for (const auto& [key, g] : groups) {
      text += "|";
      for (const auto& k : key) text += " " + k + " |";
      text += " " + std::to_string(g.first) + " |";
      for (const auto& s : g.second)
        text += " " + (s.ok() ? fixed(s.mean(), 2) + " ± " + fixed(s.stdev(), 2) : std::string("n/a")) + " |";
      text += "\n";
    }
    return text;
  }
};

std::optional<double> finite(double v) {
  return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
}

}  // namespace

void cmd_report(const json& /*cfg*/, const json& inputs, const fs::path& out) {
  const auto& runs = inputs.at("runs");
  if (runs.empty()) throw ConfigError("report needs at least one run directory");
  std::optional<std::string> kind;
  Table table;
  for (const auto& r : runs) {
    const fs::path dir = r.get<std::string>();
    if (!fs::exists(dir / kOutcomesFile))
      throw ArtifactError("not an attack or batch run: " + dir.string());
    const std::string this_kind = fs::exists(dir / kBatchFile) ? "batch" : "attack";
    if (kind && *kind != this_kind)
      throw ConfigError("schema mismatch: cannot merge " + *kind + " and " + this_kind + " runs (" +
                        dir.string() + ")");
    kind = this_kind;
    const auto results = read_results(dir);
    const auto& cfg = results.config;
    const std::string estimator = cfg.at("attack").at("estimator").get<std::string>();
    const std::string eps = format_double(cfg.at("attack").at("epsilon").get<double>());
    if (this_kind == "attack") {
      table.keys = {"estimator", "start", "tune", "epsilon"};
      table.metrics = {"success_rate", "queries_per_seed", "queries_per_ae", "queries_per_search",
                       "transfer_rate"};
      const auto s = summarize(results.outcomes);
      table.add({estimator, cfg.at("attack").at("start").get<std::string>(),
                 cfg.at("attack").at("tune").get<bool>() ? "on" : "off", eps},
                {s.success_rate, s.queries_per_seed, s.aes ? finite(s.queries_per_ae) : std::nullopt,
                 finite(s.queries_per_search), s.transfer_rate});
    } else {
      table.keys = {"estimator", "strategy", "epsilon"};
      table.metrics.clear();
      for (double p : kTopPercents) table.metrics.push_back("top_" + format_double(p) + "pct_queries");
      table.metrics.push_back("aes_found");
      table.metrics.push_back("total_queries");
      const auto doc = json::parse(read_text_file(dir / kBatchFile));
      for (const auto& rep : doc.at("reports")) {
        std::vector<std::optional<double>> row;
        for (double p : kTopPercents) {
          const auto& q = rep.at("queries_to_top_percent").at(format_double(p));
          row.push_back(q.is_null() ? std::nullopt : std::optional<double>(q.get<double>()));
        }
        row.push_back(rep.at("aes_found").get<double>());
        row.push_back(rep.at("total_queries").get<double>());
        table.add({estimator, rep.at("strategy").get<std::string>(), eps}, row);
      }
    }
  }
  write_text_file(out / "report.csv", table.csv());
  const std::string md = table.markdown();
  write_text_file(out / "report.md", md);
  std::cout << md;
}

void run_command(const std::string& command, const json& cfg, const json& inputs, const fs::path& out) {
  if (command == "train") cmd_train(cfg, out);
  else if (command == "attack") cmd_attack(cfg, inputs, out);
  else if (command == "batch") cmd_batch(cfg, inputs, out);
  else if (command == "report") cmd_report(cfg, inputs, out);
  else throw ConfigError("unknown command in manifest: " + command);
}

}  // namespace hyba::cli
