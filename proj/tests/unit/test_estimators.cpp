#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "hyba/error.hpp"
#include "hyba/estimators.hpp"
#include "hyba/oracle.hpp"

using namespace hyba;
using hyba::testing::cosine;
using hyba::testing::LinearObjective;
using hyba::testing::random_mlp;
using hyba::testing::random_point;

namespace {

class ConstantObjective final : public ScalarObjective {
 public:
  explicit ConstantObjective(std::size_t d) : d_(d) {}
  double operator()(std::span<const double>) const override { return 3.25; }
  std::size_t dim() const override { return d_; }

 private:
  std::size_t d_;
};

}  // namespace

TEST(ScalarObjective, LogSpaceValuesAndAccounting) {
  EXPECT_EQ(objective_from_probs(std::vector<double>{1.0, 0.0}, AttackGoal::targeted(0)), 0.0);
  EXPECT_NEAR(objective_from_probs(std::vector<double>{0.5, 0.5}, AttackGoal::untargeted(0)),
              std::log(2.0), 1e-12);
  EXPECT_EQ(objective_from_probs(std::vector<double>{0.3, 0.7}, AttackGoal::targeted(1),
                                 ObjectiveMode::raw_confidence),
            0.7);
  auto m = random_mlp({4, 3}, 2);
  QueryLedger ledger;
  QueryOracle oracle(m, ledger, 5);
  auto x = random_point(4, 1);
  scalar_objective(oracle, x, AttackGoal::targeted(1));
  scalar_objective(oracle, x, AttackGoal::targeted(1));
  EXPECT_EQ(ledger.total(), 2u);
  EXPECT_EQ(ledger.count_for(5), 2u);
}

TEST(Zoo, LinearObjectiveGivesTwiceTheGradient) {
  auto w = random_point(20, 3, -2, 2);
  LinearObjective f(w, 0.7);
  auto x = random_point(20, 4);
  for (double delta : {1e-1, 1e-3, 1e-5}) {
    auto g = zoo_grad(f, x, delta);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(g[i], 2 * w[i], 1e-6);
  }
  EXPECT_EQ(f.calls(), 3u * 40u);
}

TEST(Zoo, ConstantObjectiveGivesZero) {
  ConstantObjective f(7);
  for (double v : zoo_grad(f, random_point(7, 1), 0.01)) EXPECT_EQ(v, 0.0);
}

TEST(Zoo, ConvergesToTwiceTheGradientOfSmoothObjective) {
  auto m = random_mlp({6, 3}, 9);
  QueryLedger ledger;
  QueryOracle oracle(m, ledger);
  auto x = random_point(6, 10);
  const auto goal = AttackGoal::targeted(1);
  // log p_1 of a linear softmax model is smooth; its gradient is (e_1 - p)^T W.
  auto p = probs(m, x);
  std::vector<double> grad(6, 0.0);
  const auto& layer = m.layers()[0];
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t r = 0; r < 3; ++r)
      grad[c] += ((r == 1 ? 1.0 : 0.0) - p[r]) * layer.weights[r * 6 + c];
  double prev_err = 1e9;
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    auto g = zoo_grad(oracle, x, goal, delta);
    double err = 0;
    for (std::size_t i = 0; i < 6; ++i) err = std::max(err, std::abs(g[i] - 2 * grad[i]));
    EXPECT_LT(err, prev_err);
    prev_err = err;
  }
  EXPECT_LT(prev_err, 1e-5);
  EXPECT_EQ(ledger.total(), 3u * 12u);
}

TEST(Zoo, SignMatchesStandardCentralDifference) {
  // The attack steps along sign(g), so the doubled scale leaves every step unchanged.
  auto toy = hyba::testing::toy_problem(200, 3, 8, 12, 6);
  QueryLedger ledger;
  QueryOracle oracle(toy.model, ledger);
  std::size_t compared = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto& ex = toy.data[s];
    const auto goal = AttackGoal::untargeted(ex.label);
    std::vector<double> x(ex.image.values());
    const auto g = zoo_grad(oracle, x, goal, 1e-3);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto up = x, down = x;
      up[i] += 1e-3;
      down[i] -= 1e-3;
      const double standard = (objective_from_probs(probs(toy.model, up), goal) -
                               objective_from_probs(probs(toy.model, down), goal)) /
                              (2 * 1e-3);
      EXPECT_EQ(g[i], 2 * standard);
      EXPECT_EQ((g[i] > 0) - (g[i] < 0), (standard > 0) - (standard < 0));
      ++compared;
    }
  }
  EXPECT_EQ(compared, 320u);
}

TEST(Autozoom, ConstantObjectiveGivesZero) {
  ConstantObjective f(9);
  for (int n : {1, 5, 40})
    for (double v : autozoom_grad(f, random_point(9, 2), 0.01, n, 7)) EXPECT_EQ(v, 0.0);
}

TEST(Autozoom, LinearObjectiveMatchesSphereExpectation) {
  const std::size_t d = 30;
  auto w = random_point(d, 11, -1, 1);
  LinearObjective f(w);
  auto g = autozoom_grad(f, random_point(d, 12), 1e-3, 50000, 13);
  EXPECT_GT(cosine(g, w), 0.99);
  // E[u u^T] = I / D on the unit sphere, so the estimate concentrates on w / D.
  const double scale = std::inner_product(g.begin(), g.end(), w.begin(), 0.0) /
                       std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  EXPECT_NEAR(scale * static_cast<double>(d), 1.0, 0.03);
  EXPECT_EQ(f.calls(), 50001u);
}

TEST(Autozoom, CubeDirectionsAlsoAlign) {
  auto w = random_point(10, 21, -1, 1);
  LinearObjective f(w);
  auto g = autozoom_grad(f, random_point(10, 22), 1e-3, 20000, 3, AutozoomDirections::unit_cube);
  EXPECT_GT(cosine(g, w), 0.99);
}

TEST(Nes, ConstantObjectiveCancelsExactly) {
  ConstantObjective f(12);
  for (double v : nes_grad(f, random_point(12, 2), 0.01, 20, 5)) EXPECT_EQ(v, 0.0);
}

TEST(Nes, LinearObjectiveAligns) {
  auto w = random_point(40, 31, -1, 1);
  LinearObjective f(w);
  auto g = nes_grad(f, random_point(40, 32), 1e-3, 50000, 33);
  EXPECT_GT(cosine(g, w), 0.99);
  // E[u u^T] = I for standard Gaussian directions.
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(g[i], w[i], 0.1);
  EXPECT_EQ(f.calls(), 50000u);
}

TEST(Nes, RejectsOddOrTinySampleCounts) {
  LinearObjective f({1.0, 2.0});
  EXPECT_THROW(nes_grad(f, std::vector<double>{0.5, 0.5}, 0.01, 3, 1), ConfigError);
  EXPECT_THROW(nes_grad(f, std::vector<double>{0.5, 0.5}, 0.01, 0, 1), ConfigError);
  EXPECT_THROW(zoo_grad(f, std::vector<double>{0.5, 0.5}, 0.0), ConfigError);
}

TEST(Estimators, DeterministicGivenSeed) {
  auto w = random_point(15, 1, -1, 1);
  LinearObjective f(w);
  auto x = random_point(15, 2);
  EXPECT_EQ(nes_grad(f, x, 0.01, 30, 4), nes_grad(f, x, 0.01, 30, 4));
  EXPECT_EQ(autozoom_grad(f, x, 0.01, 30, 4), autozoom_grad(f, x, 0.01, 30, 4));
  EXPECT_NE(nes_grad(f, x, 0.01, 30, 4), nes_grad(f, x, 0.01, 30, 5));
}

TEST(Estimators, OracleQueryCountsFollowTheTable) {
  auto m = random_mlp({3, 4, 3}, 1);
  QueryLedger ledger;
  QueryOracle oracle(m, ledger);
  auto x = random_point(3, 1);
  const auto goal = AttackGoal::untargeted(0);
  zoo_grad(oracle, x, goal, 0.01);
  EXPECT_EQ(ledger.total(), 6u);
  autozoom_grad(oracle, x, goal, 0.01, 10, 1);
  EXPECT_EQ(ledger.total(), 17u);
  nes_grad(oracle, x, goal, 0.01, 100, 1);
  EXPECT_EQ(ledger.total(), 117u);
  EXPECT_EQ(queries_per_estimate(EstimatorKind::zoo, 3, 999), 6u);
  EXPECT_EQ(queries_per_estimate(EstimatorKind::autozoom, 3, 10), 11u);
  EXPECT_EQ(queries_per_estimate(EstimatorKind::nes, 3, 100), 100u);
}

TEST(Estimators, PositiveAlignmentOnTrainedModel) {
  auto toy = hyba::testing::toy_problem(300, 3, 8, 16, 5);
  QueryLedger ledger;
  QueryOracle oracle(toy.model, ledger);
  double nes_sum = 0, az_sum = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto& ex = toy.data[s];
    const auto goal = AttackGoal::untargeted(ex.label);
    // Ascent direction of -log p_y.
    auto truth = grad_input(toy.model, ex.image, CrossEntropy{ex.label});
    nes_sum += cosine(nes_grad(oracle, ex.image.data(), goal, 0.01, 1000, s), truth);
    az_sum += cosine(autozoom_grad(oracle, ex.image.data(), goal, 0.01, 1000, s), truth);
  }
  EXPECT_GT(nes_sum / 50, 0.3);
  EXPECT_GT(az_sum / 50, 0.3);
}

TEST(Estimators, NamesRoundTrip) {
  for (auto k : {EstimatorKind::zoo, EstimatorKind::autozoom, EstimatorKind::nes})
    EXPECT_EQ(estimator_from_string(to_string(k)), k);
  EXPECT_THROW(estimator_from_string("spsa"), ConfigError);
}
