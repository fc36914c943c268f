#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "hyba/error.hpp"
#include "hyba/losses.hpp"
#include "hyba/mlp.hpp"
#include "hyba/model_json.hpp"
#include "hyba/rng.hpp"

using namespace hyba;
using hyba::testing::random_mlp;
using hyba::testing::random_point;

namespace {

std::vector<double> hand_forward(const MlpModel& m, std::vector<double> x) {
  for (const auto& layer : m.layers()) {
    std::vector<double> y(layer.rows);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      double acc = layer.bias[r];
      for (std::size_t c = 0; c < layer.cols; ++c) acc += layer.weights[r * layer.cols + c] * x[c];
      y[r] = layer.activation == Activation::relu ? (acc > 0 ? acc : 0.0) : acc;
    }
    x = std::move(y);
  }
  return x;
}

std::vector<double> finite_difference(const MlpModel& m, std::vector<double> x,
                                      const LossSpec& loss, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = evaluate_loss(m, x, loss);
    x[i] = orig - h;
    const double down = evaluate_loss(m, x, loss);
    x[i] = orig;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Image, RejectsOutOfRangeAndShapeMismatch) {
  EXPECT_THROW(Image({0.5, 1.2}), ConfigError);
  EXPECT_THROW(Image({0.5, -0.1}), ConfigError);
  EXPECT_THROW(Image(std::vector<double>{0.1, 0.2, 0.3}, Shape{2, 2, 1}), DimensionError);
  EXPECT_THROW(Image(std::vector<double>{}), DimensionError);
  Image ok(std::vector<double>{0, 0.5, 1, 0.25}, Shape{2, 2, 1});
  EXPECT_EQ(ok.size(), 4u);
  EXPECT_EQ(ok.shape().height, 2u);
}

TEST(Logits, IdentityModel) {
  DenseLayer layer{2, 2, {1, 0, 0, 1}, {0, 0}, Activation::identity};
  MlpModel m({layer});
  auto z = logits(m, std::vector<double>{0.2, 0.8});
  EXPECT_DOUBLE_EQ(z[0], 0.2);
  EXPECT_DOUBLE_EQ(z[1], 0.8);
}

TEST(Logits, MatchesHandForward) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto m = random_mlp({7, 11, 4}, s);
    auto x = random_point(7, 1000 + s);
    auto z = logits(m, x);
    auto oracle = hand_forward(m, x);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], oracle[i], 1e-9);
    EXPECT_EQ(z, logits(m, x));
  }
}

TEST(Logits, DimensionMismatchThrows) {
  auto m = random_mlp({3, 4, 2}, 1);
  EXPECT_THROW(logits(m, std::vector<double>{0.1, 0.2}), DimensionError);
}

TEST(Model, RejectsBrokenLayerChains) {
  DenseLayer a{3, 2, std::vector<double>(6, 0.1), std::vector<double>(3, 0), Activation::relu};
  DenseLayer b{2, 4, std::vector<double>(8, 0.1), std::vector<double>(2, 0), Activation::identity};
  EXPECT_THROW(MlpModel({a, b}), DimensionError);
  DenseLayer relu_last{2, 3, std::vector<double>(6, 0.1), std::vector<double>(2, 0),
                       Activation::relu};
  EXPECT_THROW(MlpModel({a, relu_last}), ConfigError);
  DenseLayer one_class{1, 2, {1, 1}, {0}, Activation::identity};
  EXPECT_THROW(MlpModel({one_class}), ConfigError);
}

TEST(Softmax, UniformAndOverflow) {
  auto p = softmax(std::vector<double>(5, 0.0));
  for (double v : p) EXPECT_NEAR(v, 0.2, 1e-15);
  auto q = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_NEAR(q[0], 1.0, 1e-15);
  EXPECT_GE(q[1], 0.0);
  EXPECT_TRUE(std::isfinite(q[1]));
}

TEST(Softmax, MatchesDirectOracleAndArgmax) {
  hyba::Rng rng = make_rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(6);
    for (auto& v : z) v = n(rng);
    auto p = softmax(z);
    double denom = 0;
    for (double v : z) denom += std::exp(v);
    double sum = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(p[i], std::exp(z[i]) / denom, 1e-9);
      EXPECT_GT(p[i], 0.0);
      sum += p[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(argmax(z), argmax(p));
  }
}

TEST(Argmax, LowestIndexOnTies) {
  EXPECT_EQ(argmax(std::vector<double>{3, 3}), 0);
  EXPECT_EQ(argmax(std::vector<double>{1, 4, 4, 2}), 1);
}

TEST(GradInput, CrossEntropyOnLinearModelIsClosedForm) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto m = random_mlp({5, 3}, s);
    auto x = random_point(5, 50 + s);
    const int label = static_cast<int>(s % 3);
    auto g = grad_input(m, x, CrossEntropy{label});
    auto p = probs(m, x);
    const auto& layer = m.layers()[0];
    for (std::size_t c = 0; c < 5; ++c) {
      double expected = 0;
      for (std::size_t r = 0; r < 3; ++r)
        expected += (p[r] - (static_cast<int>(r) == label ? 1.0 : 0.0)) * layer.weights[r * 5 + c];
      EXPECT_NEAR(g[c], expected, 1e-9);
    }
  }
}

TEST(GradInput, AgreesWithFiniteDifferences) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto m = random_mlp({6, 9, 8, 4}, s);
    auto x = random_point(6, 700 + s, 0.1, 0.9);
    const LossSpec losses[] = {CrossEntropy{static_cast<int>(s % 4)},
                               LogProbability{static_cast<int>((s + 1) % 4)},
                               LogitWeights{{0.3, -1.0, 2.0, 0.5}}};
    for (const auto& loss : losses) {
      auto g = grad_input(m, x, loss);
      auto fd = finite_difference(m, x, loss, 1e-5);
      for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], fd[i], 1e-4);
    }
  }
}

TEST(GradInput, FlatMarginGivesZero) {
  auto m = random_mlp({4, 6, 3}, 3);
  auto x = random_point(4, 3);
  const int pred = predict(m, x);
  auto g = grad_input(m, x, LogitMargin{AttackGoal::targeted(pred)});
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
  auto data = make_synthetic(200, 2, 2, 4.0, 17);
  const std::size_t widths[] = {2, 2};
  TrainConfig tc;
  tc.epochs = 20;
  tc.learning_rate = 0.5;
  tc.rng_seed = 3;
  auto r = train_sgd(MlpModel::glorot(widths, 1), data, tc);
  EXPECT_GE(r.train_accuracy, 0.95);
  EXPECT_DOUBLE_EQ(r.train_accuracy, accuracy(r.model, data));
}

TEST(Train, ZeroEpochsIsNoOpAndSeedsAreDeterministic) {
  auto data = make_synthetic(60, 3, 4, 3.0, 2);
  auto m0 = random_mlp({4, 5, 3}, 8);
  TrainConfig tc;
  tc.epochs = 0;
  EXPECT_EQ(train_sgd(m0, data, tc).model, m0);
  tc.epochs = 3;
  tc.rng_seed = 42;
  EXPECT_EQ(train_sgd(m0, data, tc).model, train_sgd(m0, data, tc).model);
  tc.adversarial = AdversarialTraining{0.1, 0.05, 2, 0.5};
  EXPECT_EQ(train_sgd(m0, data, tc).model, train_sgd(m0, data, tc).model);
}

TEST(Train, RejectsBadInput) {
  auto m = random_mlp({4, 3}, 1);
  TrainConfig tc;
  EXPECT_THROW(train_sgd(m, {}, tc), ConfigError);
  auto data = make_synthetic(10, 3, 4, 3.0, 1);
  tc.learning_rate = 0.0;
  EXPECT_THROW(train_sgd(m, data, tc), ConfigError);
  tc.learning_rate = 0.1;
  auto wrong = make_synthetic(10, 3, 5, 3.0, 1);
  EXPECT_THROW(train_sgd(m, wrong, tc), DimensionError);
}

TEST(ModelJson, ExactRoundTrip) {
  auto m = random_mlp({5, 7, 3}, 77);
  auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  EXPECT_EQ(back, m);
  EXPECT_EQ(model_hash(back), model_hash(m));
}

TEST(ModelJson, RejectsMalformedDocuments) {
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"layers": 3})")), ParseError);
  auto doc = model_to_json(random_mlp({2, 2}, 1));
  doc["layers"][0]["activation"] = "tanh";
  EXPECT_THROW(model_from_json(doc), ParseError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), ArtifactError);
}
