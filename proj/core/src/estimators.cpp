#include "hyba/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hyba/error.hpp"
#include "hyba/rng.hpp"

namespace hyba {
namespace {

constexpr double kProbFloor = 1e-30;

void check_point(const ScalarObjective& f, std::span<const double> x, double delta) {
  if (x.size() != f.dim()) throw DimensionError("estimator: point dimension mismatch");
  if (!(delta > 0.0)) throw ConfigError("estimator: delta must be positive");
}

std::vector<double> shifted(std::span<const double> x, std::span<const double> u, double scale) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + scale * u[i];
  return out;
}

}  // namespace

OracleObjective::OracleObjective(QueryOracle oracle, AttackGoal goal, ObjectiveMode mode)
    : oracle_(oracle), goal_(goal), mode_(mode) {
  check_goal(goal_, oracle_.num_classes());
}

double OracleObjective::operator()(std::span<const double> x) const {
  return objective_from_probs(oracle_.query(x), goal_, mode_);
}

double objective_from_probs(std::span<const double> p, const AttackGoal& goal, ObjectiveMode mode) {
  check_goal(goal, static_cast<int>(p.size()));
  const double pc = p[goal.cls];
  const double v = mode == ObjectiveMode::log_confidence ? std::log(std::max(pc, kProbFloor)) : pc;
  return goal.is_targeted() ? v : -v;
}

double scalar_objective(const QueryOracle& oracle, std::span<const double> x,
                        const AttackGoal& goal, ObjectiveMode mode) {
  return OracleObjective(oracle, goal, mode)(x);
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::zoo: return "zoo";
    case EstimatorKind::autozoom: return "autozoom";
    case EstimatorKind::nes: return "nes";
  }
  return "unknown";
}

EstimatorKind estimator_from_string(std::string_view name) {
  if (name == "zoo") return EstimatorKind::zoo;
  if (name == "autozoom") return EstimatorKind::autozoom;
  if (name == "nes") return EstimatorKind::nes;
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::vector<double> zoo_grad(const ScalarObjective& f, std::span<const double> x, double delta) {
  check_point(f, x, delta);
  std::vector<double> g(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + delta;
    const double up = f(probe);
    probe[i] = x[i] - delta;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / delta;
  }
  return g;
}

std::vector<double> autozoom_grad(const ScalarObjective& f, std::span<const double> x,
                                  double delta, int samples, std::uint64_t rng_seed,
                                  AutozoomDirections dirs) {
  check_point(f, x, delta);
  if (samples < 1) throw ConfigError("autozoom: N must be >= 1");
  Rng rng = make_rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> cube(-1.0, 1.0);

  const double base = f(x);
  std::vector<double> g(x.size(), 0.0);
  std::vector<double> u(x.size());
  for (int s = 0; s < samples; ++s) {
    if (dirs == AutozoomDirections::unit_sphere) {
      double norm2 = 0.0;
      for (double& v : u) {
        v = normal(rng);
        norm2 += v * v;
      }
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& v : u) v *= inv;
    } else {
      for (double& v : u) v = cube(rng);
    }
    const double coeff = (f(shifted(x, u, delta)) - base) / delta;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += coeff * u[i];
  }
  for (double& v : g) v /= samples;
  return g;
}

std::vector<double> nes_grad(const ScalarObjective& f, std::span<const double> x, double delta,
                             int samples, std::uint64_t rng_seed) {
  check_point(f, x, delta);
  if (samples < 2 || samples % 2 != 0) {
    throw ConfigError("nes: N must be even and >= 2 (antithetic pairs), got " +
                      std::to_string(samples));
  }
  Rng rng = make_rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> g(x.size(), 0.0);
  std::vector<double> u(x.size());
  for (int s = 0; s < samples / 2; ++s) {
    for (double& v : u) v = normal(rng);
    const double plus = f(shifted(x, u, delta));
    const double minus = f(shifted(x, u, -delta));
    // u and -u each contribute f(x + delta u_i) / delta * u_i.
    const double coeff = (plus - minus) / delta;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += coeff * u[i];
  }
  for (double& v : g) v /= samples;
  return g;
}

std::uint64_t queries_per_estimate(EstimatorKind kind, std::size_t dim, int samples) {
  switch (kind) {
    case EstimatorKind::zoo: return 2 * static_cast<std::uint64_t>(dim);
    case EstimatorKind::autozoom: return static_cast<std::uint64_t>(samples) + 1;
    case EstimatorKind::nes: return static_cast<std::uint64_t>(samples);
  }
  return 0;
}

std::vector<double> zoo_grad(const QueryOracle& oracle, std::span<const double> x,
                             const AttackGoal& goal, double delta, ObjectiveMode mode) {
  return zoo_grad(OracleObjective(oracle, goal, mode), x, delta);
}

std::vector<double> autozoom_grad(const QueryOracle& oracle, std::span<const double> x,
                                  const AttackGoal& goal, double delta, int samples,
                                  std::uint64_t rng_seed, ObjectiveMode mode) {
  return autozoom_grad(OracleObjective(oracle, goal, mode), x, delta, samples, rng_seed);
}

std::vector<double> nes_grad(const QueryOracle& oracle, std::span<const double> x,
                             const AttackGoal& goal, double delta, int samples,
                             std::uint64_t rng_seed, ObjectiveMode mode) {
  return nes_grad(OracleObjective(oracle, goal, mode), x, delta, samples, rng_seed);
}

}  // namespace hyba
