#include "hyba/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hyba/error.hpp"

namespace hyba {
namespace {

constexpr double kProbFloor = 1e-30;

struct Runner {
  int index;
  double value;
};

// Largest entry other than `skip`, lowest index on ties.
Runner best_other(std::span<const double> v, int skip) {
  Runner r{-1, -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < static_cast<int>(v.size()); ++i) {
    if (i != skip && (r.index < 0 || v[i] > r.value)) r = {i, v[i]};
  }
  return r;
}

void check(std::span<const double> v, const AttackGoal& goal) {
  if (v.size() < 2) throw DimensionError("need at least two classes");
  check_goal(goal, static_cast<int>(v.size()));
}

double log_sum_exp(std::span<const double> z, int skip) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(z.size()); ++i) {
    if (i != skip) m = std::max(m, z[i]);
  }
  double s = 0.0;
  for (int i = 0; i < static_cast<int>(z.size()); ++i) {
    if (i != skip) s += std::exp(z[i] - m);
  }
  return m + std::log(s);
}

}  // namespace

double cw_margin(std::span<const double> z, const AttackGoal& goal) {
  check(z, goal);
  const Runner other = best_other(z, goal.cls);
  const double m = goal.is_targeted() ? other.value - z[goal.cls] : z[goal.cls] - other.value;
  return std::max(0.0, m);
}

std::vector<double> cw_margin_grad(std::span<const double> z, const AttackGoal& goal) {
  check(z, goal);
  std::vector<double> g(z.size(), 0.0);
  const Runner other = best_other(z, goal.cls);
  const double sign = goal.is_targeted() ? 1.0 : -1.0;
  const double m = sign * (other.value - z[goal.cls]);
  if (m > 0.0) {
    g[other.index] = sign;
    g[goal.cls] = -sign;
  }
  return g;
}

double target_loss(std::span<const double> p, const AttackGoal& goal) {
  check(p, goal);
  std::vector<double> lp(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) lp[i] = std::log(std::max(p[i], kProbFloor));
  const Runner other = best_other(lp, goal.cls);
  const double gap = goal.is_targeted() ? other.value - lp[goal.cls] : lp[goal.cls] - other.value;
  return std::max(0.0, gap);
}

double confidence_gap(std::span<const double> z, const AttackGoal& goal) {
  check(z, goal);
  const Runner other = best_other(z, goal.cls);
  return goal.is_targeted() ? z[goal.cls] - other.value : other.value - z[goal.cls];
}

double model_loss(std::span<const double> z, const AttackGoal& goal, PerModelLoss kind) {
  if (kind == PerModelLoss::margin) return cw_margin(z, goal);
  check(z, goal);
  const double lse = log_sum_exp(z, -1);
  if (goal.is_targeted()) return lse - z[goal.cls];
  return lse - log_sum_exp(z, goal.cls);
}

std::vector<double> model_loss_grad(std::span<const double> z, const AttackGoal& goal,
                                    PerModelLoss kind) {
  if (kind == PerModelLoss::margin) return cw_margin_grad(z, goal);
  check(z, goal);
  std::vector<double> g = softmax(z);
  if (goal.is_targeted()) {
    g[goal.cls] -= 1.0;
    return g;
  }
  // d/dz [lse(z) - lse_{i != y}(z)] = p - q, q = softmax over i != y.
  const double lse_other = log_sum_exp(z, goal.cls);
  for (int i = 0; i < static_cast<int>(z.size()); ++i) {
    if (i != goal.cls) g[i] -= std::exp(z[i] - lse_other);
  }
  return g;
}

double ensemble_loss(std::span<const MlpModel> models, std::span<const double> x,
                     const AttackGoal& goal, PerModelLoss kind) {
  if (models.empty()) throw ConfigError("ensemble_loss: empty ensemble");
  double total = 0.0;
  for (const auto& m : models) total += model_loss(logits(m, x), goal, kind);
  return total;
}

std::vector<double> ensemble_loss_grad(std::span<const MlpModel> models, std::span<const double> x,
                                       const AttackGoal& goal, PerModelLoss kind) {
  if (models.empty()) throw ConfigError("ensemble_loss_grad: empty ensemble");
  std::vector<double> total(x.size(), 0.0);
  for (const auto& m : models) {
    const std::vector<double> g = backprop_input(
        m, x, [&](std::span<const double> z) { return model_loss_grad(z, goal, kind); });
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += g[i];
  }
  return total;
}

bool goal_met(std::span<const double> z, const AttackGoal& goal) {
  check(z, goal);
  const int top = argmax(z);
  return goal.is_targeted() ? top == goal.cls : top != goal.cls;
}

bool goal_met(const MlpModel& model, std::span<const double> x, const AttackGoal& goal) {
  return goal_met(logits(model, x), goal);
}

}  // namespace hyba
