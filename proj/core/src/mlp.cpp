#include "hyba/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hyba/error.hpp"
#include "hyba/losses.hpp"
#include "hyba/rng.hpp"

namespace hyba {
namespace {

struct ForwardCache {
  // activations[0] is the input; activations[l + 1] is the output of layer l.
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> pre;
};

void check_input(const MlpModel& model, std::span<const double> x) {
  if (model.layers().empty()) throw ConfigError("model has no layers");
  if (x.size() != model.input_dim()) {
    throw DimensionError("input length " + std::to_string(x.size()) + " != model input_dim " +
                         std::to_string(model.input_dim()));
  }
}

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.assign(layer.bias.begin(), layer.bias.end());
  const double* w = layer.weights.data();
  for (std::size_t r = 0; r < layer.rows; ++r, w += layer.cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < layer.cols; ++c) acc += w[c] * in[c];
    out[r] += acc;
  }
}

void activate(Activation act, std::vector<double>& v) {
  if (act == Activation::relu) {
    for (double& e : v) e = e > 0.0 ? e : 0.0;
  }
}

ForwardCache forward(const MlpModel& model, std::span<const double> x) {
  ForwardCache cache;
  const auto& layers = model.layers();
  cache.activations.reserve(layers.size() + 1);
  cache.pre.resize(layers.size());
  cache.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    affine(layers[l], cache.activations[l], cache.pre[l]);
    std::vector<double> out = cache.pre[l];
    activate(layers[l].activation, out);
    cache.activations.push_back(std::move(out));
  }
  return cache;
}

// Pulls dL/d(pre-activation of layer l) back to dL/d(input of layer l).
std::vector<double> pull_back(const DenseLayer& layer, std::span<const double> delta) {
  std::vector<double> out(layer.cols, 0.0);
  const double* w = layer.weights.data();
  for (std::size_t r = 0; r < layer.rows; ++r, w += layer.cols) {
    const double d = delta[r];
    if (d == 0.0) continue;
    for (std::size_t c = 0; c < layer.cols; ++c) out[c] += w[c] * d;
  }
  return out;
}

void mask_relu(const DenseLayer& layer, std::span<const double> pre, std::vector<double>& delta) {
  if (layer.activation != Activation::relu) return;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (!(pre[i] > 0.0)) delta[i] = 0.0;
  }
}

std::vector<double> loss_logit_grad(std::span<const double> z, const LossSpec& loss) {
  return std::visit(
      [&](const auto& spec) -> std::vector<double> {
        using T = std::decay_t<decltype(spec)>;
        const int k = static_cast<int>(z.size());
        if constexpr (std::is_same_v<T, CrossEntropy>) {
          check_goal(AttackGoal::untargeted(spec.label), k);
          std::vector<double> g = softmax(z);
          g[spec.label] -= 1.0;
          return g;
        } else if constexpr (std::is_same_v<T, LogProbability>) {
          check_goal(AttackGoal::untargeted(spec.cls), k);
          std::vector<double> g = softmax(z);
          for (double& e : g) e = -e;
          g[spec.cls] += 1.0;
          return g;
        } else if constexpr (std::is_same_v<T, LogitMargin>) {
          return cw_margin_grad(z, spec.goal);
        } else {
          if (spec.weights.size() != z.size()) throw DimensionError("LogitWeights size mismatch");
          return spec.weights;
        }
      },
      loss);
}

double log_softmax_at(std::span<const double> z, int cls) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return z[cls] - m - std::log(s);
}

}  // namespace

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    if (L.rows == 0 || L.cols == 0) throw DimensionError("layer with zero dimension");
    if (L.weights.size() != L.rows * L.cols) throw DimensionError("layer weight count mismatch");
    if (L.bias.size() != L.rows) throw DimensionError("layer bias length mismatch");
    if (l > 0 && layers_[l - 1].rows != L.cols) {
      throw DimensionError("layer " + std::to_string(l) + " input " + std::to_string(L.cols) +
                           " does not match previous output " +
                           std::to_string(layers_[l - 1].rows));
    }
  }
  if (layers_.back().activation != Activation::identity) {
    throw ConfigError("final layer must be linear (logits)");
  }
  if (layers_.back().rows < 2) throw ConfigError("need at least two classes");
}

MlpModel MlpModel::glorot(std::span<const std::size_t> widths, std::uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("glorot: need input and output widths");
  Rng rng = make_rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.cols = widths[l];
    layer.rows = widths[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(layer.cols + layer.rows));
    std::uniform_real_distribution<double> u(-a, a);
    layer.weights.resize(layer.rows * layer.cols);
    for (double& w : layer.weights) w = u(rng);
    layer.bias.assign(layer.rows, 0.0);
    layer.activation = (l + 2 == widths.size()) ? Activation::identity : Activation::relu;
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers));
}

std::vector<double> logits(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (const auto& layer : model.layers()) {
    affine(layer, cur, next);
    activate(layer.activation, next);
    cur.swap(next);
  }
  return cur;
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.empty()) throw DimensionError("softmax of empty vector");
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
  for (double& e : p) e /= s;
  return p;
}

std::vector<double> probs(const MlpModel& model, std::span<const double> x) {
  return softmax(logits(model, x));
}

int argmax(std::span<const double> v) {
  if (v.empty()) throw DimensionError("argmax of empty vector");
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

int predict(const MlpModel& model, std::span<const double> x) { return argmax(logits(model, x)); }

double evaluate_loss(const MlpModel& model, std::span<const double> x, const LossSpec& loss) {
  const std::vector<double> z = logits(model, x);
  return std::visit(
      [&](const auto& spec) -> double {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, CrossEntropy>) {
          check_goal(AttackGoal::untargeted(spec.label), model.num_classes());
          return -log_softmax_at(z, spec.label);
        } else if constexpr (std::is_same_v<T, LogProbability>) {
          check_goal(AttackGoal::untargeted(spec.cls), model.num_classes());
          return log_softmax_at(z, spec.cls);
        } else if constexpr (std::is_same_v<T, LogitMargin>) {
          return cw_margin(z, spec.goal);
        } else {
          if (spec.weights.size() != z.size()) throw DimensionError("LogitWeights size mismatch");
          return std::inner_product(z.begin(), z.end(), spec.weights.begin(), 0.0);
        }
      },
      loss);
}

std::vector<double> backprop_input(
    const MlpModel& model, std::span<const double> x,
    const std::function<std::vector<double>(std::span<const double>)>& logit_grad) {
  check_input(model, x);
  const ForwardCache cache = forward(model, x);
  const auto& layers = model.layers();
  std::vector<double> delta = logit_grad(cache.activations.back());
  if (delta.size() != layers.back().rows) throw DimensionError("logit gradient length mismatch");
  for (std::size_t l = layers.size(); l-- > 0;) {
    mask_relu(layers[l], cache.pre[l], delta);
    delta = pull_back(layers[l], delta);
  }
  return delta;
}

std::vector<double> grad_input(const MlpModel& model, std::span<const double> x,
                               const LossSpec& loss) {
  return backprop_input(model, x,
                        [&](std::span<const double> z) { return loss_logit_grad(z, loss); });
}

double accuracy(const MlpModel& model, std::span<const LabeledExample> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) correct += predict(model, ex.image) == ex.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

std::vector<double> adversarial_input(const MlpModel& model, const LabeledExample& ex,
                                      const AdversarialTraining& adv) {
  const auto x0 = ex.image.data();
  std::vector<double> x(x0.begin(), x0.end());
  for (int s = 0; s < adv.steps; ++s) {
    const std::vector<double> g = grad_input(model, x, CrossEntropy{ex.label});
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double step = g[i] > 0.0 ? adv.step_size : (g[i] < 0.0 ? -adv.step_size : 0.0);
      const double lo = std::max(0.0, x0[i] - adv.epsilon);
      const double hi = std::min(1.0, x0[i] + adv.epsilon);
      x[i] = std::clamp(x[i] + step, lo, hi);
    }
  }
  return x;
}

}  // namespace

TrainResult train_sgd(const MlpModel& model, std::span<const LabeledExample> data,
                      const TrainConfig& cfg) {
  if (data.empty()) throw ConfigError("train_sgd: empty training data");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train_sgd: learning rate must be positive");
  if (cfg.batch_size == 0) throw ConfigError("train_sgd: batch size must be positive");
  if (cfg.epochs < 0) throw ConfigError("train_sgd: negative epoch count");
  for (const auto& ex : data) {
    if (ex.image.size() != model.input_dim()) throw DimensionError("train_sgd: example dimension");
    check_goal(AttackGoal::untargeted(ex.label), model.num_classes());
  }

  std::vector<DenseLayer> layers = model.layers();
  Rng rng = make_rng(cfg.rng_seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::vector<double>> grad_w(layers.size());
  std::vector<std::vector<double>> grad_b(layers.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        grad_w[l].assign(layers[l].weights.size(), 0.0);
        grad_b[l].assign(layers[l].rows, 0.0);
      }
      // Adversarial inputs are computed against the weights at batch start.
      const MlpModel snapshot = cfg.adversarial ? MlpModel(layers) : MlpModel();
      const std::size_t n_adv =
          cfg.adversarial
              ? static_cast<std::size_t>(std::lround(cfg.adversarial->mix *
                                                     static_cast<double>(end - start)))
              : 0;
      for (std::size_t b = start; b < end; ++b) {
        const LabeledExample& ex = data[order[b]];
        std::vector<double> input;
        if (b - start < n_adv) {
          input = adversarial_input(snapshot, ex, *cfg.adversarial);
        } else {
          input.assign(ex.image.data().begin(), ex.image.data().end());
        }
        ForwardCache cache;
        cache.activations.push_back(std::move(input));
        cache.pre.resize(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
          affine(layers[l], cache.activations[l], cache.pre[l]);
          std::vector<double> out = cache.pre[l];
          activate(layers[l].activation, out);
          cache.activations.push_back(std::move(out));
        }
        std::vector<double> delta = softmax(cache.activations.back());
        delta[ex.label] -= 1.0;
        for (std::size_t l = layers.size(); l-- > 0;) {
          mask_relu(layers[l], cache.pre[l], delta);
          const auto& in = cache.activations[l];
          double* gw = grad_w[l].data();
          for (std::size_t r = 0; r < layers[l].rows; ++r, gw += layers[l].cols) {
            const double d = delta[r];
            grad_b[l][r] += d;
            if (d == 0.0) continue;
            for (std::size_t c = 0; c < layers[l].cols; ++c) gw[c] += d * in[c];
          }
          if (l > 0) delta = pull_back(layers[l], delta);
        }
      }
      const double scale = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
          layers[l].weights[i] -= scale * grad_w[l][i];
        }
        for (std::size_t i = 0; i < layers[l].rows; ++i) layers[l].bias[i] -= scale * grad_b[l][i];
      }
    }
  }

  TrainResult result{MlpModel(std::move(layers)), 0.0};
  result.train_accuracy = accuracy(result.model, data);
  return result;
}

}  // namespace hyba
