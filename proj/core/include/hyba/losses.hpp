#pragma once

#include <span>
#include <vector>

#include "hyba/goal.hpp"
#include "hyba/image.hpp"
#include "hyba/mlp.hpp"

namespace hyba {

/// Logit margin toward the goal, clamped at zero.
///   targeted t:   max(0, max_{i!=t} z_i - z_t)
///   untargeted y: max(0, z_y - max_{i!=y} z_i)
double cw_margin(std::span<const double> logits, const AttackGoal& goal);

/// d cw_margin / d logits. Zero wherever the clamp is active (margin <= 0).
std::vector<double> cw_margin_grad(std::span<const double> logits, const AttackGoal& goal);

/// Log-probability gap toward the goal, positive part. Probabilities are
/// floored at 1e-30 before the log.
///   targeted t:   (max_{i!=t} log p_i - log p_t)^+
///   untargeted y: (log p_y - max_{i!=y} log p_i)^+
double target_loss(std::span<const double> probs, const AttackGoal& goal);

/// Signed logit gap toward the goal; positive once a model is fooled.
///   targeted t:   z_t - max_{i!=t} z_i
///   untargeted y: max_{i!=y} z_i - z_y
double confidence_gap(std::span<const double> logits, const AttackGoal& goal);

enum class PerModelLoss { margin, cross_entropy };

/// Single-model attack loss. `cross_entropy` is -log p_t (targeted) or
/// -log(1 - p_y) (untargeted); both are nonnegative.
double model_loss(std::span<const double> logits, const AttackGoal& goal, PerModelLoss kind);
std::vector<double> model_loss_grad(std::span<const double> logits, const AttackGoal& goal,
                                    PerModelLoss kind);

/// Sum of per-model losses over the ensemble.
double ensemble_loss(std::span<const MlpModel> models, std::span<const double> x,
                     const AttackGoal& goal, PerModelLoss kind = PerModelLoss::margin);

/// Gradient of ensemble_loss with respect to x.
std::vector<double> ensemble_loss_grad(std::span<const MlpModel> models, std::span<const double> x,
                                       const AttackGoal& goal,
                                       PerModelLoss kind = PerModelLoss::margin);

bool goal_met(std::span<const double> logits, const AttackGoal& goal);
bool goal_met(const MlpModel& model, std::span<const double> x, const AttackGoal& goal);
inline bool goal_met(const MlpModel& model, const Image& x, const AttackGoal& goal) {
  return goal_met(model, x.data(), goal);
}

}  // namespace hyba
