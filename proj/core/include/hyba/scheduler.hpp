#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyba/blackbox.hpp"
#include "hyba/goal.hpp"
#include "hyba/image.hpp"
#include "hyba/mlp.hpp"
#include "hyba/oracle.hpp"
#include "hyba/whitebox.hpp"

namespace hyba {

using SeedId = std::uint64_t;
using SeedOrder = std::vector<SeedId>;

/// How the transfer-check phase ranks seeds from local information.
enum class Phase1Metric {
  /// Group by fooled local models (desc), then PGD steps (asc).
  combined,
  /// PGD steps to fool the whole ensemble; partial seeds last.
  steps_only,
  /// Number of fooled local models only.
  models_only,
  max_gap,
  min_gap,
  ave_gap,
};
std::string_view to_string(Phase1Metric m);
Phase1Metric phase1_metric_from_string(std::string_view name);

enum class GapKind { max_gap, min_gap, ave_gap };

/// (k desc, steps_to_k[k] asc, id asc) with k the seed's final_k.
SeedOrder phase1_order(const std::map<SeedId, PgdTrace>& traces,
                       Phase1Metric metric = Phase1Metric::combined);

/// Groups by fooled local models (desc), then by the aggregated signed
/// logit gap of the candidate (desc), then id.
SeedOrder confidence_gap_order(std::span<const MlpModel> local,
                               const std::map<SeedId, Image>& candidates,
                               const std::map<SeedId, AttackGoal>& goals, GapKind kind);

/// Ascending target_loss of the cached phase-one response, then id.
SeedOrder phase2_order(const std::map<SeedId, std::vector<double>>& probs,
                       const std::map<SeedId, AttackGoal>& goals);

struct SeedCost {
  std::uint64_t queries = 0;
  bool success = false;
};
using CostTable = std::map<SeedId, SeedCost>;

/// Successes by ascending cost, then failures; ties by id.
SeedOrder retroactive_optimal_order(const CostTable& costs);

enum class BatchStrategy { two_phase, random, retro_optimal, loss_only };
std::string_view to_string(BatchStrategy s);
BatchStrategy batch_strategy_from_string(std::string_view name);

struct CurvePoint {
  std::uint64_t queries = 0;
  std::uint64_t aes_found = 0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct SeedResult {
  SeedId seed_id = 0;
  std::uint64_t queries = 0;
  bool success = false;
  FoundBy found_by = FoundBy::failed;
};

inline constexpr double kTopPercents[] = {1.0, 2.0, 5.0, 10.0};

struct BatchReport {
  BatchStrategy strategy = BatchStrategy::two_phase;
  std::uint64_t run_seed = 0;
  std::size_t num_seeds = 0;
  /// Order of the first pass (transfer checks, or attacks for random).
  SeedOrder ordering;
  /// Optimization order of the phased strategies.
  SeedOrder phase2_ordering;
  /// One point per AE, in discovery order.
  std::vector<CurvePoint> curve;
  std::vector<SeedResult> per_seed;
  /// Percent -> total queries spent when ceil(x% * n) AEs had been found.
  std::map<double, std::optional<std::uint64_t>> queries_to_top;
  /// Queries spent when the transfer-check phase finished (phased strategies).
  std::optional<std::uint64_t> phase1_end;
  std::uint64_t total_queries = 0;
  std::uint64_t aes_found = 0;

  CostTable cost_table() const;
};

/// Number of AEs found within `budget` queries.
std::uint64_t aes_within(std::span<const CurvePoint> curve, std::uint64_t budget);

/// True when `a` has found at least as many AEs as `b` at every budget.
bool curve_dominates(std::span<const CurvePoint> a, std::span<const CurvePoint> b);

std::map<double, std::optional<std::uint64_t>> queries_to_top_x(
    std::span<const CurvePoint> curve, std::size_t num_seeds);

/// 1-based position in `order` of the first seed in `transfers`, if any.
std::optional<std::size_t> checks_to_first_transfer(std::span<const SeedId> order,
                                                    const std::map<SeedId, bool>& transfers);

struct BatchConfig {
  BatchStrategy strategy = BatchStrategy::two_phase;
  Phase1Metric phase1_metric = Phase1Metric::combined;
  /// Hybrid candidates (true) or raw seeds (false) as starting points.
  bool start_from_candidate = true;
  /// Seeds the random order and every per-seed attack stream.
  std::uint64_t run_seed = 0;
  PgdConfig pgd;
  BlackboxConfig blackbox;
};

/// Attacks the whole pool under the chosen ordering strategy. Local models
/// stay fixed. retro_optimal replays `costs` and issues no queries.
BatchReport run_batch(std::span<const Seed> seeds, std::span<const MlpModel> local,
                      const QueryOracle& oracle, const GoalFn& goal_fn, const BatchConfig& cfg,
                      const CostTable* costs = nullptr);

}  // namespace hyba
