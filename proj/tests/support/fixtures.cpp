#include "fixtures.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "hyba/idx.hpp"
#include "hyba/rng.hpp"

#ifndef HYBA_TEST_DATA_DIR
#error "HYBA_TEST_DATA_DIR must point at the data directory"
#endif

namespace hyba::testing {

MlpModel random_mlp(std::vector<std::size_t> widths, std::uint64_t seed) {
  auto base = MlpModel::glorot(widths, seed);
  Rng rng = make_rng(derive_seed(seed, 99));
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<DenseLayer> layers = base.layers();
  for (auto& layer : layers)
    for (auto& b : layer.bias) b = u(rng);
  return MlpModel(std::move(layers));
}

std::vector<double> random_point(std::size_t dim, std::uint64_t seed, double lo, double hi) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(dim);
  for (auto& v : x) v = u(rng);
  return x;
}

double LinearObjective::operator()(std::span<const double> x) const {
  ++calls_;
  return std::inner_product(w_.begin(), w_.end(), x.begin(), c_);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

ToyProblem toy_problem(std::size_t n, int classes, std::size_t dim, std::size_t hidden,
                       std::uint64_t seed) {
  ToyProblem p;
  p.data = make_synthetic(n, classes, dim, 3.0, seed);
  std::vector<std::size_t> widths{dim, hidden, static_cast<std::size_t>(classes)};
  TrainConfig tc;
  tc.epochs = 20;
  tc.learning_rate = 0.1;
  tc.rng_seed = seed + 1;
  p.model = train_sgd(MlpModel::glorot(widths, seed + 2), p.data, tc).model;
  return p;
}

namespace {

MnistFixture build_mnist() {
  MnistFixture f;
  const std::string dir = std::string(HYBA_TEST_DATA_DIR) + "/mnist5k/";
  auto all = downsample_2x2(load_idx(dir + "images-idx3-ubyte", dir + "labels-idx1-ubyte"));
  auto split = split_indices(all.size(), 0.7, 1);
  f.train = select(all, split.train);
  f.heldout = select(all, split.heldout);
  f.heldout_ids.assign(split.heldout.begin(), split.heldout.end());

  TrainConfig tc;
  tc.epochs = 15;
  tc.learning_rate = 0.1;
  tc.batch_size = 32;
  tc.rng_seed = 11;
  tc.adversarial = AdversarialTraining{0.1, 0.1 / 3.0, 3, 0.5};
  const std::size_t target_widths[] = {196, 64, 10};
  f.target = train_sgd(MlpModel::glorot(target_widths, 100), f.train, tc).model;
  f.target_accuracy = accuracy(f.target, f.heldout);

  auto order = split_indices(f.train.size(), 1.0, 200).train;
  const std::size_t third = f.train.size() / 3;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<std::size_t> part(order.begin() + i * third, order.begin() + (i + 1) * third);
    TrainConfig lc;
    lc.epochs = 20;
    lc.learning_rate = 0.1;
    lc.rng_seed = 300 + i;
    const std::size_t widths[] = {196, 32 * (i + 1), 10};
    auto model = train_sgd(MlpModel::glorot(widths, 400 + i), select(f.train, part), lc).model;
    f.local_accuracy.push_back(accuracy(model, f.heldout));
    f.locals.push_back(std::move(model));
  }
  return f;
}

}  // namespace

PgdConfig MnistFixture::pgd() const {
  PgdConfig cfg;
  cfg.epsilon = 0.3;
  cfg.step_size = 0.01;
  cfg.max_steps = 200;
  return cfg;
}

BlackboxConfig MnistFixture::blackbox(EstimatorKind kind) const {
  BlackboxConfig cfg;
  cfg.estimator = kind;
  cfg.epsilon = 0.3;
  cfg.delta = 0.01;
  cfg.step_size = 0.01;
  cfg.samples = kind == EstimatorKind::nes ? 50 : 20;
  cfg.max_queries = 2000;
  return cfg;
}

SeedPool MnistFixture::pool(std::uint64_t sampling_seed, std::size_t per_class) const {
  SeedPoolConfig pc;
  pc.per_class = per_class;
  pc.sampling_seed = sampling_seed;
  pc.dataset_id = "mnist5k-14x14";
  return build_seed_pool(heldout, heldout_ids, target, pc, locals);
}

const MnistFixture& mnist_fixture() {
  static const MnistFixture fixture = build_mnist();
  return fixture;
}

}  // namespace hyba::testing
