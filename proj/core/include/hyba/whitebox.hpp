#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hyba/goal.hpp"
#include "hyba/image.hpp"
#include "hyba/losses.hpp"
#include "hyba/mlp.hpp"

namespace hyba {

struct PgdConfig {
  double epsilon = 0.3;
  /// Defaults to epsilon / 10 when left at zero.
  double step_size = 0.0;
  int max_steps = 100;
  std::uint64_t rng_seed = 0;
  /// Uniform start inside the feasible ball instead of the seed itself.
  bool random_start = false;
  PerModelLoss loss = PerModelLoss::margin;

  double effective_step() const noexcept { return step_size > 0.0 ? step_size : epsilon / 10.0; }
  /// Throws ConfigError on epsilon <= 0, step > epsilon or max_steps < 1.
  void validate() const;
};

struct PgdTrace {
  Image candidate;
  /// k -> first step index at which at least k local models were fooled at
  /// once. Step 0 is the starting point. Key 0 is always present.
  std::map<int, int> steps_to_k;
  int final_k = 0;
  int num_models = 0;
  int steps_taken = 0;

  /// Steps needed to reach final_k.
  int steps_at_final_k() const { return steps_to_k.at(final_k); }
};

/// Projection onto [center - eps, center + eps] intersected with [0, 1].
std::vector<double> clip_linf(std::span<const double> x, std::span<const double> center,
                              double epsilon);
Image clip_linf(const Image& x, const Image& center, double epsilon);

/// Number of models whose prediction at x satisfies the goal.
int count_fooled(std::span<const MlpModel> models, std::span<const double> x,
                 const AttackGoal& goal);

/// Sign-gradient PGD on the summed ensemble loss, projected onto the
/// feasible ball of the seed. Stops once every model is fooled or after
/// max_steps. Returns the last iterate if all models were fooled, otherwise
/// the earliest iterate attaining the largest number of fooled models.
PgdTrace pgd_ensemble(const Image& seed, std::span<const MlpModel> models, const AttackGoal& goal,
                      const PgdConfig& cfg);

}  // namespace hyba
