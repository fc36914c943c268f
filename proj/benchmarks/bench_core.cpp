#include <benchmark/benchmark.h>

#include <vector>

#include "hyba/estimators.hpp"
#include "hyba/mlp.hpp"
#include "hyba/oracle.hpp"
#include "hyba/rng.hpp"
#include "hyba/whitebox.hpp"

using namespace hyba;

namespace {

MlpModel model_for(std::size_t dim, std::size_t hidden) {
  const std::size_t widths[] = {dim, hidden, 10};
  return MlpModel::glorot(widths, 7);
}

std::vector<double> point(std::size_t dim) {
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(dim);
  for (auto& v : x) v = u(rng);
  return x;
}

void BM_Forward(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto m = model_for(dim, static_cast<std::size_t>(state.range(1)));
  const auto x = point(dim);
  for (auto _ : state) benchmark::DoNotOptimize(probs(m, x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Forward)->Args({196, 64})->Args({784, 64})->Args({784, 256});

void BM_GradInput(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto m = model_for(dim, 64);
  const auto x = point(dim);
  for (auto _ : state) benchmark::DoNotOptimize(grad_input(m, x, CrossEntropy{3}));
}
BENCHMARK(BM_GradInput)->Arg(196)->Arg(784);

template <EstimatorKind Kind>
void BM_Estimate(benchmark::State& state) {
  const std::size_t dim = 196;
  const auto m = model_for(dim, 64);
  const auto x = point(dim);
  const int samples = static_cast<int>(state.range(0));
  QueryLedger ledger;
  QueryOracle oracle(m, ledger);
  const auto goal = AttackGoal::untargeted(predict(m, x));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    if constexpr (Kind == EstimatorKind::zoo) benchmark::DoNotOptimize(zoo_grad(oracle, x, goal, 0.01));
    if constexpr (Kind == EstimatorKind::autozoom)
      benchmark::DoNotOptimize(autozoom_grad(oracle, x, goal, 0.01, samples, ++seed));
    if constexpr (Kind == EstimatorKind::nes)
      benchmark::DoNotOptimize(nes_grad(oracle, x, goal, 0.01, samples, ++seed));
  }
  state.counters["queries/iter"] = benchmark::Counter(
      static_cast<double>(ledger.total()) / static_cast<double>(state.iterations()));
}
BENCHMARK(BM_Estimate<EstimatorKind::zoo>)->Arg(0);
BENCHMARK(BM_Estimate<EstimatorKind::autozoom>)->Arg(20)->Arg(100);
BENCHMARK(BM_Estimate<EstimatorKind::nes>)->Arg(50)->Arg(100);

void BM_PgdEnsemble(benchmark::State& state) {
  const std::size_t dim = 196;
  std::vector<MlpModel> locals;
  for (std::size_t i = 0; i < 3; ++i) locals.push_back(model_for(dim, 32 * (i + 1)));
  const Image seed(point(dim));
  PgdConfig cfg;
  cfg.step_size = 0.01;
  cfg.max_steps = static_cast<int>(state.range(0));
  const auto goal = AttackGoal::untargeted(predict(locals[0], seed.data()));
  for (auto _ : state) benchmark::DoNotOptimize(pgd_ensemble(seed, locals, goal, cfg));
}
BENCHMARK(BM_PgdEnsemble)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
