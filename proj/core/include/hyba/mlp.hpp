#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "hyba/goal.hpp"
#include "hyba/image.hpp"

namespace hyba {

enum class Activation { relu, identity };

/// Dense layer y = act(W x + b). W is rows x cols, row-major, rows = outputs.
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::identity;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward classifier. The last layer is linear and produces logits.
/// Instances are immutable once built; training returns a new model.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers);

  /// Glorot-uniform weights, zero biases, ReLU on every hidden layer.
  /// `widths` = {input_dim, hidden..., num_classes}.
  static MlpModel glorot(std::span<const std::size_t> widths, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return layers_.front().cols; }
  int num_classes() const noexcept { return static_cast<int>(layers_.back().rows); }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

std::vector<double> logits(const MlpModel& model, std::span<const double> x);
inline std::vector<double> logits(const MlpModel& model, const Image& x) {
  return logits(model, x.data());
}

/// Softmax with max subtraction.
std::vector<double> softmax(std::span<const double> z);

std::vector<double> probs(const MlpModel& model, std::span<const double> x);
inline std::vector<double> probs(const MlpModel& model, const Image& x) {
  return probs(model, x.data());
}

/// First index of the maximum.
int argmax(std::span<const double> v);
int predict(const MlpModel& model, std::span<const double> x);
inline int predict(const MlpModel& model, const Image& x) { return predict(model, x.data()); }

// Scalar losses of the logit vector that grad_input can differentiate.

/// -log softmax(z)[label]
struct CrossEntropy {
  int label = 0;
};
/// log softmax(z)[cls]
struct LogProbability {
  int cls = 0;
};
/// Clamped logit margin for the goal (see cw_margin).
struct LogitMargin {
  AttackGoal goal;
};
/// sum_i w_i z_i
struct LogitWeights {
  std::vector<double> weights;
};

using LossSpec = std::variant<CrossEntropy, LogProbability, LogitMargin, LogitWeights>;

double evaluate_loss(const MlpModel& model, std::span<const double> x, const LossSpec& loss);

/// Vector-Jacobian product: given dL/dz at the logits z(x), returns dL/dx.
/// `logit_grad` is called once with the forward logits.
std::vector<double> backprop_input(
    const MlpModel& model, std::span<const double> x,
    const std::function<std::vector<double>(std::span<const double>)>& logit_grad);

/// Exact gradient of `loss` with respect to the input. ReLU has zero
/// subgradient at 0; argmax ties resolve to the lowest index.
std::vector<double> grad_input(const MlpModel& model, std::span<const double> x,
                               const LossSpec& loss);
inline std::vector<double> grad_input(const MlpModel& model, const Image& x, const LossSpec& loss) {
  return grad_input(model, x.data(), loss);
}

/// Inner PGD used to train on adversarial inputs instead of clean ones.
struct AdversarialTraining {
  double epsilon = 0.3;
  double step_size = 0.1;
  int steps = 3;
  /// Fraction of each batch replaced by adversarial versions.
  double mix = 1.0;
};

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t rng_seed = 0;
  std::optional<AdversarialTraining> adversarial;
};

struct TrainResult {
  MlpModel model;
  /// Clean accuracy on the training data after the last epoch.
  double train_accuracy = 0.0;
};

/// Minibatch SGD on mean cross-entropy, continuing from `model`'s weights.
TrainResult train_sgd(const MlpModel& model, std::span<const LabeledExample> data,
                      const TrainConfig& cfg);

double accuracy(const MlpModel& model, std::span<const LabeledExample> data);

}  // namespace hyba
