#include "hyba/hybrid.hpp"

#include <algorithm>
#include <numeric>

#include "hyba/error.hpp"
#include "hyba/losses.hpp"
#include "hyba/rng.hpp"

namespace hyba {

void HybridConfig::validate() const {
  if (tune_period < 1) throw ConfigError("hybrid: tune_period must be >= 1");
  if (tune_threshold_c < 1) throw ConfigError("hybrid: tune_threshold_c must be >= 1");
  if (tune_epochs < 0) throw ConfigError("hybrid: negative tune_epochs");
}

void TuningSet::add(std::span<const LabeledExample> examples) {
  examples_.insert(examples_.end(), examples.begin(), examples.end());
}

std::vector<LabeledExample> TuningSet::sample(std::size_t c, std::uint64_t rng_seed) const {
  if (examples_.size() <= c) return examples_;
  std::vector<std::size_t> idx(examples_.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(rng_seed);
  // Partial Fisher-Yates: the first c slots are a uniform sample.
  for (std::size_t i = 0; i < c; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(c);
  std::sort(idx.begin(), idx.end());
  std::vector<LabeledExample> out;
  out.reserve(c);
  for (std::size_t i : idx) out.push_back(examples_[i]);
  return out;
}

TuneReport tune_local_models(std::vector<MlpModel>& local, const TuningSet& tuning,
                             const TuneConfig& cfg) {
  if (tuning.size() == 0) throw ConfigError("tune_local_models: empty tuning set");
  if (cfg.threshold_c < 1) throw ConfigError("tune_local_models: threshold must be >= 1");
  const std::vector<LabeledExample> data = tuning.sample(cfg.threshold_c, cfg.rng_seed);
  for (std::size_t i = 0; i < local.size(); ++i) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.rng_seed = derive_seed(cfg.rng_seed, i + 1);
    local[i] = train_sgd(local[i], data, tc).model;
  }
  return {tuning.size(), data.size()};
}

std::uint64_t seed_stream(std::uint64_t master, std::uint64_t seed_id) noexcept {
  return derive_seed(master, seed_id);
}

HybridResult run_hybrid(std::span<const Seed> seeds, std::vector<MlpModel> local,
                        const QueryOracle& oracle, const GoalFn& goal_fn,
                        const PgdConfig& pgd_cfg, const BlackboxConfig& bb_cfg,
                        const HybridConfig& hy_cfg) {
  hy_cfg.validate();
  bb_cfg.validate();
  if (hy_cfg.start_from_candidate) {
    pgd_cfg.validate();
    if (local.empty()) throw ConfigError("run_hybrid: candidate starts need a local ensemble");
  }
  if (hy_cfg.tune_enabled && local.empty()) throw ConfigError("run_hybrid: nothing to tune");

  HybridResult result;
  std::vector<const Seed*> accepted;
  for (const Seed& s : seeds) {
    if (predict(oracle.unmetered_model(), s.image) == s.label) {
      accepted.push_back(&s);
    } else {
      result.excluded.push_back(s.id);
    }
  }

  std::vector<LabeledExample> initial;
  initial.reserve(accepted.size());
  for (const Seed* s : accepted) initial.push_back({s->image, s->label});
  TuningSet tuning(std::move(initial));

  BlackboxConfig bb = bb_cfg;
  bb.record_byproducts = bb_cfg.record_byproducts || hy_cfg.tune_enabled;

  for (std::size_t n = 0; n < accepted.size(); ++n) {
    const Seed& seed = *accepted[n];
    const AttackGoal goal = goal_fn(seed);
    const std::uint64_t stream = seed_stream(hy_cfg.rng_seed, seed.id);
    const QueryOracle seed_oracle = oracle.for_seed(seed.id);

    Image start = seed.image;
    if (hy_cfg.start_from_candidate) {
      PgdConfig pc = pgd_cfg;
      pc.rng_seed = derive_seed(stream, 1);
      PgdTrace trace = pgd_ensemble(seed.image, local, goal, pc);
      start = trace.candidate;
      result.traces.push_back(std::move(trace));
    }

    AttackOutcome outcome;
    const TransferCheck check = check_transfer(start, seed_oracle, goal);
    if (check.success) {
      outcome.seed_id = seed.id;
      outcome.success = true;
      outcome.adversarial = start;
      outcome.queries_used = 1;
      outcome.found_by = FoundBy::direct_transfer;
    } else {
      bb.rng_seed = derive_seed(stream, 2);
      outcome = optimize_attack(seed, start, seed_oracle, goal, bb, /*start_checked=*/true);
      outcome.queries_used += 1;
      if (!outcome.success) outcome.found_by = FoundBy::failed;
    }

    if (hy_cfg.tune_enabled) {
      tuning.add(outcome.byproducts);
      result.byproducts_collected += outcome.byproducts.size();
      outcome.byproducts.clear();
      outcome.byproducts.shrink_to_fit();
      if ((n + 1) % static_cast<std::size_t>(hy_cfg.tune_period) == 0) {
        TuneConfig tc;
        tc.epochs = hy_cfg.tune_epochs;
        tc.threshold_c = hy_cfg.tune_threshold_c;
        tc.learning_rate = hy_cfg.tune_learning_rate;
        tc.batch_size = hy_cfg.tune_batch_size;
        tc.rng_seed = derive_seed(hy_cfg.rng_seed, 0x7475'6e65ULL, result.tuning_rounds);
        result.last_tune = tune_local_models(local, tuning, tc);
        ++result.tuning_rounds;
      }
    }
    result.outcomes.push_back(std::move(outcome));
  }

  result.tuning_set_size = tuning.size();
  result.local_models = std::move(local);
  return result;
}

double measure_transfer_rate(std::span<const MlpModel> local, const QueryOracle& eval_oracle,
                             std::span<const Seed> heldout, const GoalFn& goal_fn,
                             const PgdConfig& pgd_cfg) {
  if (heldout.empty()) throw ConfigError("measure_transfer_rate: empty held-out set");
  std::size_t transfers = 0;
  for (const Seed& seed : heldout) {
    const AttackGoal goal = goal_fn(seed);
    PgdConfig pc = pgd_cfg;
    pc.rng_seed = derive_seed(pgd_cfg.rng_seed, seed.id);
    const PgdTrace trace = pgd_ensemble(seed.image, local, goal, pc);
    transfers += check_transfer(trace.candidate, eval_oracle.for_seed(seed.id), goal).success;
  }
  return static_cast<double>(transfers) / static_cast<double>(heldout.size());
}

}  // namespace hyba
