#include "hyba/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "hyba/error.hpp"
#include "hyba/hybrid.hpp"
#include "hyba/losses.hpp"
#include "hyba/rng.hpp"

namespace hyba {

std::string_view to_string(Phase1Metric m) {
  switch (m) {
    case Phase1Metric::combined: return "combined";
    case Phase1Metric::steps_only: return "steps_only";
    case Phase1Metric::models_only: return "models_only";
    case Phase1Metric::max_gap: return "max_gap";
    case Phase1Metric::min_gap: return "min_gap";
    case Phase1Metric::ave_gap: return "ave_gap";
  }
  return "unknown";
}

Phase1Metric phase1_metric_from_string(std::string_view name) {
  for (auto m : {Phase1Metric::combined, Phase1Metric::steps_only, Phase1Metric::models_only,
                 Phase1Metric::max_gap, Phase1Metric::min_gap, Phase1Metric::ave_gap}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown phase-1 metric '" + std::string(name) + "'");
}

std::string_view to_string(BatchStrategy s) {
  switch (s) {
    case BatchStrategy::two_phase: return "two_phase";
    case BatchStrategy::random: return "random";
    case BatchStrategy::retro_optimal: return "retro_optimal";
    case BatchStrategy::loss_only: return "loss_only";
  }
  return "unknown";
}

BatchStrategy batch_strategy_from_string(std::string_view name) {
  for (auto s : {BatchStrategy::two_phase, BatchStrategy::random, BatchStrategy::retro_optimal,
                 BatchStrategy::loss_only}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown batch strategy '" + std::string(name) + "'");
}

namespace {

template <typename Key>
SeedOrder sorted_by(std::vector<std::pair<Key, SeedId>> keyed) {
  std::sort(keyed.begin(), keyed.end());
  SeedOrder out;
  out.reserve(keyed.size());
  for (const auto& kv : keyed) out.push_back(kv.second);
  return out;
}

const AttackGoal& goal_of(const std::map<SeedId, AttackGoal>& goals, SeedId id) {
  const auto it = goals.find(id);
  if (it == goals.end()) throw ConfigError("missing goal for seed " + std::to_string(id));
  return it->second;
}

}  // namespace

SeedOrder phase1_order(const std::map<SeedId, PgdTrace>& traces, Phase1Metric metric) {
  using Key = std::tuple<int, int>;
  std::vector<std::pair<Key, SeedId>> keyed;
  keyed.reserve(traces.size());
  for (const auto& [id, t] : traces) {
    switch (metric) {
      case Phase1Metric::combined:
        keyed.push_back({{-t.final_k, t.steps_at_final_k()}, id});
        break;
      case Phase1Metric::steps_only: {
        const int steps = t.final_k == t.num_models ? t.steps_at_final_k()
                                                    : std::numeric_limits<int>::max();
        keyed.push_back({{steps, 0}, id});
        break;
      }
      case Phase1Metric::models_only:
        keyed.push_back({{-t.final_k, 0}, id});
        break;
      default:
        throw ConfigError("phase1_order: gap metrics need confidence_gap_order");
    }
  }
  return sorted_by(std::move(keyed));
}

SeedOrder confidence_gap_order(std::span<const MlpModel> local,
                               const std::map<SeedId, Image>& candidates,
                               const std::map<SeedId, AttackGoal>& goals, GapKind kind) {
  if (local.empty()) throw ConfigError("confidence_gap_order: empty ensemble");
  using Key = std::tuple<int, double>;
  std::vector<std::pair<Key, SeedId>> keyed;
  keyed.reserve(candidates.size());
  for (const auto& [id, x] : candidates) {
    const AttackGoal& goal = goal_of(goals, id);
    int fooled = 0;
    double agg = kind == GapKind::max_gap ? -std::numeric_limits<double>::infinity()
                 : kind == GapKind::min_gap ? std::numeric_limits<double>::infinity()
                                            : 0.0;
    for (const auto& m : local) {
      const std::vector<double> z = logits(m, x);
      fooled += goal_met(z, goal) ? 1 : 0;
      const double gap = confidence_gap(z, goal);
      switch (kind) {
        case GapKind::max_gap: agg = std::max(agg, gap); break;
        case GapKind::min_gap: agg = std::min(agg, gap); break;
        case GapKind::ave_gap: agg += gap; break;
      }
    }
    if (kind == GapKind::ave_gap) agg /= static_cast<double>(local.size());
    keyed.push_back({{-fooled, -agg}, id});
  }
  return sorted_by(std::move(keyed));
}

SeedOrder phase2_order(const std::map<SeedId, std::vector<double>>& probs,
                       const std::map<SeedId, AttackGoal>& goals) {
  std::vector<std::pair<double, SeedId>> keyed;
  keyed.reserve(probs.size());
  for (const auto& [id, p] : probs) keyed.push_back({target_loss(p, goal_of(goals, id)), id});
  return sorted_by(std::move(keyed));
}

SeedOrder retroactive_optimal_order(const CostTable& costs) {
  using Key = std::tuple<int, std::uint64_t>;
  std::vector<std::pair<Key, SeedId>> keyed;
  keyed.reserve(costs.size());
  for (const auto& [id, c] : costs) keyed.push_back({{c.success ? 0 : 1, c.queries}, id});
  return sorted_by(std::move(keyed));
}

CostTable BatchReport::cost_table() const {
  CostTable t;
  for (const auto& r : per_seed) t[r.seed_id] = {r.queries, r.success};
  return t;
}

std::uint64_t aes_within(std::span<const CurvePoint> curve, std::uint64_t budget) {
  std::uint64_t found = 0;
  for (const auto& p : curve) {
    if (p.queries > budget) break;
    found = p.aes_found;
  }
  return found;
}

bool curve_dominates(std::span<const CurvePoint> a, std::span<const CurvePoint> b) {
  // Both are step functions; b only rises at its own points.
  for (const auto& p : b) {
    if (aes_within(a, p.queries) < p.aes_found) return false;
  }
  return true;
}

std::map<double, std::optional<std::uint64_t>> queries_to_top_x(std::span<const CurvePoint> curve,
                                                                std::size_t num_seeds) {
  std::map<double, std::optional<std::uint64_t>> out;
  for (double pct : kTopPercents) {
    const auto needed = static_cast<std::size_t>(
        std::max(1.0, std::ceil(pct * static_cast<double>(num_seeds) / 100.0 - 1e-9)));
    out[pct] = curve.size() >= needed ? std::optional(curve[needed - 1].queries) : std::nullopt;
  }
  return out;
}

std::optional<std::size_t> checks_to_first_transfer(std::span<const SeedId> order,
                                                    const std::map<SeedId, bool>& transfers) {
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto it = transfers.find(order[i]);
    if (it != transfers.end() && it->second) return i + 1;
  }
  return std::nullopt;
}

namespace {

struct Prepared {
  std::map<SeedId, const Seed*> seeds;
  std::map<SeedId, AttackGoal> goals;
  std::map<SeedId, Image> starts;
  std::map<SeedId, PgdTrace> traces;
};

Prepared prepare(std::span<const Seed> seeds, std::span<const MlpModel> local,
                 const GoalFn& goal_fn, const BatchConfig& cfg) {
  Prepared p;
  for (const Seed& s : seeds) {
    if (!p.seeds.emplace(s.id, &s).second) {
      throw ConfigError("run_batch: duplicate seed id " + std::to_string(s.id));
    }
    const AttackGoal goal = goal_fn(s);
    p.goals.emplace(s.id, goal);
    if (cfg.start_from_candidate) {
      PgdConfig pc = cfg.pgd;
      pc.rng_seed = derive_seed(seed_stream(cfg.run_seed, s.id), 1);
      PgdTrace trace = pgd_ensemble(s.image, local, goal, pc);
      p.starts.emplace(s.id, trace.candidate);
      p.traces.emplace(s.id, std::move(trace));
    } else {
      p.starts.emplace(s.id, s.image);
    }
  }
  return p;
}

class Tally {
 public:
  explicit Tally(BatchReport& r) : r_(r) {}

  void spend(std::uint64_t q) { r_.total_queries += q; }
  void found() {
    ++r_.aes_found;
    r_.curve.push_back({r_.total_queries, r_.aes_found});
  }

 private:
  BatchReport& r_;
};

}  // namespace

BatchReport run_batch(std::span<const Seed> seeds, std::span<const MlpModel> local,
                      const QueryOracle& oracle, const GoalFn& goal_fn, const BatchConfig& cfg,
                      const CostTable* costs) {
  BatchReport report;
  report.strategy = cfg.strategy;
  report.run_seed = cfg.run_seed;
  report.num_seeds = seeds.size();
  Tally tally(report);

  if (cfg.strategy == BatchStrategy::retro_optimal) {
    if (costs == nullptr) throw ConfigError("retro_optimal needs a completed cost table");
    for (const Seed& s : seeds) {
      if (!costs->contains(s.id)) {
        throw ConfigError("cost table has no entry for seed " + std::to_string(s.id));
      }
    }
    CostTable table;
    for (const Seed& s : seeds) table[s.id] = costs->at(s.id);
    report.ordering = retroactive_optimal_order(table);
    for (SeedId id : report.ordering) {
      const SeedCost& c = table.at(id);
      tally.spend(c.queries);
      if (c.success) tally.found();
      report.per_seed.push_back(
          {id, c.queries, c.success,
           !c.success ? FoundBy::failed
           : c.queries == 1 ? FoundBy::direct_transfer
                            : FoundBy::gradient_attack});
    }
    report.queries_to_top = queries_to_top_x(report.curve, report.num_seeds);
    return report;
  }

  cfg.blackbox.validate();
  if (cfg.start_from_candidate) {
    cfg.pgd.validate();
    if (local.empty()) throw ConfigError("run_batch: candidate starts need a local ensemble");
  }
  const Prepared prep = prepare(seeds, local, goal_fn, cfg);

  auto attack_from = [&](SeedId id, std::uint64_t already_spent) {
    const Seed& seed = *prep.seeds.at(id);
    BlackboxConfig bb = cfg.blackbox;
    bb.rng_seed = derive_seed(seed_stream(cfg.run_seed, id), 2);
    AttackOutcome o = optimize_attack(seed, prep.starts.at(id), oracle.for_seed(id),
                                      prep.goals.at(id), bb, /*start_checked=*/true);
    tally.spend(o.queries_used);
    if (o.success) tally.found();
    report.per_seed.push_back({id, already_spent + o.queries_used, o.success,
                               o.success ? FoundBy::gradient_attack : FoundBy::failed});
  };

  if (cfg.strategy == BatchStrategy::random) {
    SeedOrder order;
    for (const Seed& s : seeds) order.push_back(s.id);
    Rng rng = make_rng(derive_seed(cfg.run_seed, 0x72616e646f6dULL));
    std::shuffle(order.begin(), order.end(), rng);
    report.ordering = order;
    for (SeedId id : order) {
      const TransferCheck check = check_transfer(prep.starts.at(id), oracle.for_seed(id),
                                                 prep.goals.at(id));
      tally.spend(1);
      if (check.success) {
        tally.found();
        report.per_seed.push_back({id, 1, true, FoundBy::direct_transfer});
      } else {
        attack_from(id, 1);
      }
    }
    report.queries_to_top = queries_to_top_x(report.curve, report.num_seeds);
    return report;
  }

  // Phased strategies: one check per seed, then optimization by target loss.
  SeedOrder first;
  if (cfg.strategy == BatchStrategy::loss_only) {
    for (const Seed& s : seeds) first.push_back(s.id);
  } else if (!cfg.start_from_candidate) {
    throw ConfigError("two_phase ordering needs local candidates (use loss_only for raw seeds)");
  } else {
    switch (cfg.phase1_metric) {
      case Phase1Metric::max_gap:
        first = confidence_gap_order(local, prep.starts, prep.goals, GapKind::max_gap);
        break;
      case Phase1Metric::min_gap:
        first = confidence_gap_order(local, prep.starts, prep.goals, GapKind::min_gap);
        break;
      case Phase1Metric::ave_gap:
        first = confidence_gap_order(local, prep.starts, prep.goals, GapKind::ave_gap);
        break;
      default: first = phase1_order(prep.traces, cfg.phase1_metric);
    }
  }

  std::map<SeedId, std::vector<double>> cached;
  for (SeedId id : first) {
    TransferCheck check = check_transfer(prep.starts.at(id), oracle.for_seed(id),
                                         prep.goals.at(id));
    tally.spend(1);
    if (check.success) {
      tally.found();
      report.per_seed.push_back({id, 1, true, FoundBy::direct_transfer});
    } else {
      cached.emplace(id, std::move(check.probs));
    }
  }
  report.phase1_end = report.total_queries;

  const SeedOrder second = phase2_order(cached, prep.goals);
  for (SeedId id : second) attack_from(id, 1);

  report.ordering = first;
  report.phase2_ordering = second;
  report.queries_to_top = queries_to_top_x(report.curve, report.num_seeds);
  return report;
}

}  // namespace hyba
