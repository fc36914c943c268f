#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyba/datasets.hpp"
#include "hyba/estimators.hpp"
#include "hyba/mlp.hpp"
#include "hyba/whitebox.hpp"
#include "hyba/blackbox.hpp"

namespace hyba::testing {

/// Glorot weights plus small random biases, so the bias path is exercised.
MlpModel random_mlp(std::vector<std::size_t> widths, std::uint64_t seed);

/// Uniform random point in [lo, hi]^dim.
std::vector<double> random_point(std::size_t dim, std::uint64_t seed, double lo = 0.0,
                                 double hi = 1.0);

/// f(x) = w.x + c, counting evaluations.
class LinearObjective final : public ScalarObjective {
 public:
  LinearObjective(std::vector<double> w, double c = 0.0) : w_(std::move(w)), c_(c) {}
  double operator()(std::span<const double> x) const override;
  std::size_t dim() const override { return w_.size(); }
  const std::vector<double>& weights() const { return w_; }
  std::uint64_t calls() const { return calls_; }

 private:
  std::vector<double> w_;
  double c_;
  mutable std::uint64_t calls_ = 0;
};

double cosine(std::span<const double> a, std::span<const double> b);

/// Two well separated blobs in 2-D with a small trained classifier.
struct ToyProblem {
  std::vector<LabeledExample> data;
  MlpModel model;
};
ToyProblem toy_problem(std::size_t n, int classes, std::size_t dim, std::size_t hidden,
                       std::uint64_t seed);

/// 14x14 MNIST subset with one adversarially trained target and three
/// locals trained on disjoint thirds of the training split.
struct MnistFixture {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> heldout;
  std::vector<std::uint64_t> heldout_ids;
  MlpModel target;
  std::vector<MlpModel> locals;
  double target_accuracy = 0.0;
  std::vector<double> local_accuracy;

  PgdConfig pgd() const;
  BlackboxConfig blackbox(EstimatorKind kind) const;
  /// 20 seeds per class that the target and every local classify correctly.
  SeedPool pool(std::uint64_t sampling_seed, std::size_t per_class = 20) const;
};

/// Built once per process.
const MnistFixture& mnist_fixture();

}  // namespace hyba::testing
