#include "hyba/whitebox.hpp"

#include <algorithm>
#include <random>

#include "hyba/error.hpp"
#include "hyba/rng.hpp"

namespace hyba {

void PgdConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("pgd: epsilon must be positive");
  if (step_size < 0.0) throw ConfigError("pgd: negative step size");
  if (effective_step() > epsilon) throw ConfigError("pgd: step size exceeds epsilon");
  if (max_steps < 1) throw ConfigError("pgd: max_steps must be >= 1");
}

std::vector<double> clip_linf(std::span<const double> x, std::span<const double> center,
                              double epsilon) {
  if (x.size() != center.size()) throw DimensionError("clip_linf: size mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lo = std::max(0.0, center[i] - epsilon);
    const double hi = std::min(1.0, center[i] + epsilon);
    out[i] = std::clamp(x[i], lo, hi);
  }
  return out;
}

Image clip_linf(const Image& x, const Image& center, double epsilon) {
  return center.with_values(clip_linf(x.data(), center.data(), epsilon));
}

int count_fooled(std::span<const MlpModel> models, std::span<const double> x,
                 const AttackGoal& goal) {
  int k = 0;
  for (const auto& m : models) k += goal_met(m, x, goal) ? 1 : 0;
  return k;
}

PgdTrace pgd_ensemble(const Image& seed, std::span<const MlpModel> models, const AttackGoal& goal,
                      const PgdConfig& cfg) {
  cfg.validate();
  if (models.empty()) throw ConfigError("pgd_ensemble: empty ensemble");
  for (const auto& m : models) {
    if (m.input_dim() != seed.size()) throw DimensionError("pgd_ensemble: model/seed dimension");
  }

  const auto center = seed.data();
  const double alpha = cfg.effective_step();
  const int num_models = static_cast<int>(models.size());

  std::vector<double> x(center.begin(), center.end());
  if (cfg.random_start) {
    Rng rng = make_rng(cfg.rng_seed);
    std::uniform_real_distribution<double> u(-cfg.epsilon, cfg.epsilon);
    for (double& v : x) v += u(rng);
    x = clip_linf(x, center, cfg.epsilon);
  }

  PgdTrace trace;
  trace.num_models = num_models;
  trace.steps_to_k[0] = 0;

  auto record = [&](int k, int step) {
    for (int j = 1; j <= k; ++j) trace.steps_to_k.try_emplace(j, step);
  };

  int k = count_fooled(models, x, goal);
  record(k, 0);
  int best_k = k;
  std::vector<double> best_x = x;

  int step = 0;
  while (k < num_models && step < cfg.max_steps) {
    const std::vector<double> g = ensemble_loss_grad(models, x, goal, cfg.loss);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (g[i] > 0.0) {
        x[i] -= alpha;
      } else if (g[i] < 0.0) {
        x[i] += alpha;
      }
    }
    x = clip_linf(x, center, cfg.epsilon);
    ++step;
    k = count_fooled(models, x, goal);
    record(k, step);
    if (k > best_k) {
      best_k = k;
      best_x = x;
    }
  }

  trace.steps_taken = step;
  trace.final_k = best_k;
  trace.candidate = seed.with_values(k == num_models ? std::move(x) : std::move(best_x));
  return trace;
}

}  // namespace hyba
