#include "hyba/blackbox.hpp"

#include <string>

#include "hyba/error.hpp"
#include "hyba/losses.hpp"
#include "hyba/rng.hpp"
#include "hyba/whitebox.hpp"

namespace hyba {

void BlackboxConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("blackbox: epsilon must be positive");
  if (!(delta > 0.0)) throw ConfigError("blackbox: delta must be positive");
  if (step_size < 0.0) throw ConfigError("blackbox: negative step size");
  if (max_queries < 1) throw ConfigError("blackbox: max_queries must be >= 1");
  if (estimator != EstimatorKind::zoo && samples < 1) throw ConfigError("blackbox: N must be >= 1");
  if (estimator == EstimatorKind::nes && (samples < 2 || samples % 2 != 0)) {
    throw ConfigError("blackbox: NES needs an even N >= 2");
  }
}

std::string_view to_string(FoundBy f) {
  switch (f) {
    case FoundBy::direct_transfer: return "direct_transfer";
    case FoundBy::gradient_attack: return "gradient_attack";
    case FoundBy::failed: return "failed";
  }
  return "unknown";
}

FoundBy found_by_from_string(std::string_view name) {
  if (name == "direct_transfer") return FoundBy::direct_transfer;
  if (name == "gradient_attack") return FoundBy::gradient_attack;
  if (name == "failed") return FoundBy::failed;
  throw ParseError("unknown found_by value '" + std::string(name) + "'");
}

TransferCheck check_transfer(const Image& candidate, const QueryOracle& oracle,
                             const AttackGoal& goal) {
  TransferCheck result;
  result.probs = oracle.query(candidate.data());
  result.success = goal_met(result.probs, goal);
  return result;
}

AttackOutcome optimize_attack(const Seed& seed, const Image& start, const QueryOracle& oracle_in,
                              const AttackGoal& goal, const BlackboxConfig& cfg,
                              bool start_checked) {
  cfg.validate();
  if (start.size() != seed.image.size() || seed.image.size() != oracle_in.input_dim()) {
    throw DimensionError("optimize_attack: seed/start/oracle dimension mismatch");
  }
  check_goal(goal, oracle_in.num_classes());

  const QueryOracle oracle = oracle_in.for_seed(seed.id);
  const OracleObjective objective(oracle, goal, cfg.objective);
  const auto center = seed.image.data();
  const double step = cfg.effective_step();
  const std::uint64_t budget = cfg.max_queries - (start_checked ? 1 : 0);
  const std::uint64_t per_iteration =
      queries_per_estimate(cfg.estimator, center.size(), cfg.samples) + 1;

  AttackOutcome out;
  out.seed_id = seed.id;
  std::vector<double> x = clip_linf(start.data(), center, cfg.epsilon);

  auto succeed = [&](std::vector<double> point) {
    out.success = true;
    out.found_by = FoundBy::gradient_attack;
    out.adversarial = seed.image.with_values(std::move(point));
  };

  if (!start_checked) {
    if (budget < 1) return out;
    const std::vector<double> p = oracle.query(x);
    out.queries_used = 1;
    if (goal_met(p, goal)) {
      succeed(std::move(x));
      return out;
    }
  }

  while (out.queries_used + per_iteration <= budget) {
    const std::uint64_t stream = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(out.iterations));
    std::vector<double> g;
    switch (cfg.estimator) {
      case EstimatorKind::zoo: g = zoo_grad(objective, x, cfg.delta); break;
      case EstimatorKind::autozoom:
        g = autozoom_grad(objective, x, cfg.delta, cfg.samples, stream, cfg.autozoom_directions);
        break;
      case EstimatorKind::nes: g = nes_grad(objective, x, cfg.delta, cfg.samples, stream); break;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (g[i] > 0.0) {
        x[i] += step;
      } else if (g[i] < 0.0) {
        x[i] -= step;
      }
    }
    x = clip_linf(x, center, cfg.epsilon);

    const std::vector<double> p = oracle.query(x);
    out.queries_used += per_iteration;
    ++out.iterations;
    if (cfg.record_byproducts) {
      out.byproducts.push_back({seed.image.with_values(x), argmax(p)});
    }
    if (goal_met(p, goal)) {
      succeed(std::move(x));
      return out;
    }
  }
  return out;
}

}  // namespace hyba
