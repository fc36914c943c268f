#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hyba/blackbox.hpp"
#include "hyba/goal.hpp"
#include "hyba/mlp.hpp"
#include "hyba/oracle.hpp"
#include "hyba/whitebox.hpp"

namespace hyba {

struct HybridConfig {
  bool tune_enabled = false;
  /// Seeds between fine-tuning rounds.
  int tune_period = 50;
  /// Largest fine-tuning set; bigger sets are uniformly subsampled.
  std::size_t tune_threshold_c = 60000;
  int tune_epochs = 1;
  double tune_learning_rate = 0.01;
  std::size_t tune_batch_size = 32;
  /// Start the optimization attack from the local-ensemble candidate
  /// instead of the raw seed.
  bool start_from_candidate = true;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Fine-tuning data: the attacker's original seeds with their true labels,
/// grown with attack byproducts.
class TuningSet {
 public:
  TuningSet() = default;
  explicit TuningSet(std::vector<LabeledExample> initial) : examples_(std::move(initial)) {}

  void add(std::span<const LabeledExample> examples);
  std::size_t size() const noexcept { return examples_.size(); }
  const std::vector<LabeledExample>& examples() const noexcept { return examples_; }

  /// All examples when size() <= c, otherwise c drawn uniformly without
  /// replacement.
  std::vector<LabeledExample> sample(std::size_t c, std::uint64_t rng_seed) const;

 private:
  std::vector<LabeledExample> examples_;
};

struct TuneConfig {
  int epochs = 1;
  std::size_t threshold_c = 60000;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t rng_seed = 0;
};

struct TuneReport {
  std::size_t set_size = 0;
  std::size_t trained_on = 0;
};

/// Continues SGD on every local model from its current weights.
TuneReport tune_local_models(std::vector<MlpModel>& local, const TuningSet& tuning,
                             const TuneConfig& cfg);

struct HybridResult {
  std::vector<AttackOutcome> outcomes;
  std::vector<PgdTrace> traces;
  std::vector<MlpModel> local_models;
  /// Seeds the target misclassifies at intake; never attacked.
  std::vector<std::uint64_t> excluded;
  int tuning_rounds = 0;
  /// With tuning on, byproducts move from the outcomes into the tuning set.
  std::size_t byproducts_collected = 0;
  std::size_t tuning_set_size = 0;
  TuneReport last_tune;
};

/// Per-seed RNG stream for the attack on seed `seed_id`.
std::uint64_t seed_stream(std::uint64_t master, std::uint64_t seed_id) noexcept;

/// The hybrid attack over `seeds` in the given order: local candidate,
/// one-query transfer check, optimization attack from the candidate when the
/// check fails, byproduct collection and periodic fine-tuning.
HybridResult run_hybrid(std::span<const Seed> seeds, std::vector<MlpModel> local,
                        const QueryOracle& oracle, const GoalFn& goal_fn,
                        const PgdConfig& pgd_cfg, const BlackboxConfig& bb_cfg,
                        const HybridConfig& hy_cfg);

/// Fraction of held-out seeds whose local PGD candidate fools the target.
/// `eval_oracle` should sit on a ledger separate from attack costs.
double measure_transfer_rate(std::span<const MlpModel> local, const QueryOracle& eval_oracle,
                             std::span<const Seed> heldout, const GoalFn& goal_fn,
                             const PgdConfig& pgd_cfg);

}  // namespace hyba
