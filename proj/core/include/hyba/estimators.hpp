#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hyba/goal.hpp"
#include "hyba/oracle.hpp"

namespace hyba {

/// Scalar the attack ascends. Log mode: log p_t (targeted) or -log p_y
/// (untargeted). Raw mode: p_t or -p_y.
enum class ObjectiveMode { log_confidence, raw_confidence };

/// Black-box scalar objective. Implementations decide what one evaluation costs.
class ScalarObjective {
 public:
  virtual ~ScalarObjective() = default;
  virtual double operator()(std::span<const double> x) const = 0;
  virtual std::size_t dim() const = 0;
};

/// Objective backed by a query oracle: each evaluation costs one query.
class OracleObjective final : public ScalarObjective {
 public:
  OracleObjective(QueryOracle oracle, AttackGoal goal,
                  ObjectiveMode mode = ObjectiveMode::log_confidence);

  double operator()(std::span<const double> x) const override;
  std::size_t dim() const override { return oracle_.input_dim(); }

 private:
  QueryOracle oracle_;
  AttackGoal goal_;
  ObjectiveMode mode_;
};

/// Objective value from an already obtained probability vector.
double objective_from_probs(std::span<const double> probs, const AttackGoal& goal,
                            ObjectiveMode mode = ObjectiveMode::log_confidence);

/// One query.
double scalar_objective(const QueryOracle& oracle, std::span<const double> x,
                        const AttackGoal& goal,
                        ObjectiveMode mode = ObjectiveMode::log_confidence);

enum class EstimatorKind { zoo, autozoom, nes };
std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(std::string_view name);

/// AutoZOOM direction distribution. Sphere is the default.
enum class AutozoomDirections { unit_sphere, unit_cube };

/// Coordinate-wise symmetric difference with divisor delta:
///   g_i = (f(x + delta e_i) - f(x - delta e_i)) / delta
/// For a linear f this is twice the gradient. 2D evaluations.
std::vector<double> zoo_grad(const ScalarObjective& f, std::span<const double> x, double delta);

/// g = (1/N) sum_i (f(x + delta u_i) - f(x)) / delta * u_i, f(x) evaluated
/// once. N + 1 evaluations.
std::vector<double> autozoom_grad(const ScalarObjective& f, std::span<const double> x,
                                  double delta, int samples, std::uint64_t rng_seed,
                                  AutozoomDirections dirs = AutozoomDirections::unit_sphere);

/// g = (1/N) sum_i f(x + delta u_i) / delta * u_i over N/2 antithetic pairs
/// (u, -u), u ~ N(0, I). N evaluations; N must be even.
std::vector<double> nes_grad(const ScalarObjective& f, std::span<const double> x, double delta,
                             int samples, std::uint64_t rng_seed);

/// Evaluations consumed by one estimate.
std::uint64_t queries_per_estimate(EstimatorKind kind, std::size_t dim, int samples);

// Oracle overloads; cost is charged to the oracle's ledger.
std::vector<double> zoo_grad(const QueryOracle& oracle, std::span<const double> x,
                             const AttackGoal& goal, double delta,
                             ObjectiveMode mode = ObjectiveMode::log_confidence);
std::vector<double> autozoom_grad(const QueryOracle& oracle, std::span<const double> x,
                                  const AttackGoal& goal, double delta, int samples,
                                  std::uint64_t rng_seed,
                                  ObjectiveMode mode = ObjectiveMode::log_confidence);
std::vector<double> nes_grad(const QueryOracle& oracle, std::span<const double> x,
                             const AttackGoal& goal, double delta, int samples,
                             std::uint64_t rng_seed,
                             ObjectiveMode mode = ObjectiveMode::log_confidence);

}  // namespace hyba
