#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "hyba/estimators.hpp"
#include "hyba/goal.hpp"
#include "hyba/image.hpp"
#include "hyba/oracle.hpp"

namespace hyba {

struct BlackboxConfig {
  EstimatorKind estimator = EstimatorKind::nes;
  double delta = 0.01;
  /// N in the estimator formulas (ignored by zoo).
  int samples = 50;
  /// Defaults to epsilon / 10 when left at zero.
  double step_size = 0.0;
  double epsilon = 0.3;
  /// Per-seed budget, including the success checks.
  std::uint64_t max_queries = 4000;
  bool record_byproducts = false;
  ObjectiveMode objective = ObjectiveMode::log_confidence;
  AutozoomDirections autozoom_directions = AutozoomDirections::unit_sphere;
  std::uint64_t rng_seed = 0;

  double effective_step() const noexcept { return step_size > 0.0 ? step_size : epsilon / 10.0; }
  void validate() const;
};

enum class FoundBy { direct_transfer, gradient_attack, failed };
std::string_view to_string(FoundBy f);
FoundBy found_by_from_string(std::string_view name);

struct AttackOutcome {
  std::uint64_t seed_id = 0;
  bool success = false;
  std::optional<Image> adversarial;
  std::uint64_t queries_used = 0;
  FoundBy found_by = FoundBy::failed;
  /// Post-step iterates labelled with the target's prediction.
  std::vector<LabeledExample> byproducts;
  int iterations = 0;
};

struct TransferCheck {
  bool success = false;
  /// Full response of the single query, cached for later prioritization.
  std::vector<double> probs;
};

/// One query: does the target classify `candidate` according to the goal?
TransferCheck check_transfer(const Image& candidate, const QueryOracle& oracle,
                             const AttackGoal& goal);

/// Estimated-gradient sign ascent on the oracle objective from `start`,
/// projected onto the feasible ball of `seed.image` (never of `start`).
///
/// Every iteration spends one estimate followed by one success-check query
/// on the new iterate. The loop stops on success or when the next iteration
/// would exceed cfg.max_queries. When `start_checked` is set the caller has
/// already spent one query verifying that `start` fails, and that query
/// counts against the budget; otherwise the first query checks `start`.
AttackOutcome optimize_attack(const Seed& seed, const Image& start, const QueryOracle& oracle,
                              const AttackGoal& goal, const BlackboxConfig& cfg,
                              bool start_checked = false);

}  // namespace hyba
