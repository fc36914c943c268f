#include "hyba/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "hyba/error.hpp"
#include "hyba/rng.hpp"

namespace hyba {

std::vector<LabeledExample> make_synthetic(std::size_t n, int classes, std::size_t dim,
                                           double separation, std::uint64_t rng_seed) {
  if (classes < 2) throw ConfigError("make_synthetic: need at least two classes");
  if (n < static_cast<std::size_t>(classes)) throw ConfigError("make_synthetic: n < classes");
  if (dim == 0) throw ConfigError("make_synthetic: dim must be positive");
  if (!(separation > 0.0)) throw ConfigError("make_synthetic: separation must be positive");

  Rng rng = make_rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> centroids(static_cast<std::size_t>(classes),
                                             std::vector<double>(dim));
  for (auto& c : centroids) {
    double norm2 = 0.0;
    for (double& v : c) {
      v = normal(rng);
      norm2 += v * v;
    }
    const double scale = 0.3 / std::sqrt(norm2);
    for (double& v : c) v = 0.5 + scale * v;
  }
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centroids.size(); ++a) {
    for (std::size_t b = a + 1; b < centroids.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        d2 += (centroids[a][i] - centroids[b][i]) * (centroids[a][i] - centroids[b][i]);
      }
      min_dist = std::min(min_dist, std::sqrt(d2));
    }
  }
  const double sigma = min_dist / (2.0 * separation);

  std::vector<LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    std::vector<double> x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = std::clamp(centroids[label][j] + sigma * normal(rng), 0.0, 1.0);
    }
    out.push_back({Image(std::move(x)), label});
  }
  return out;
}

std::vector<LabeledExample> downsample_2x2(std::span<const LabeledExample> data) {
  std::vector<LabeledExample> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    const Shape s = ex.image.shape();
    const Shape t{s.height / 2, s.width / 2, s.channels};
    if (t.size() == 0) throw DimensionError("downsample_2x2: image smaller than 2x2");
    std::vector<double> px(t.size());
    auto at = [&](std::size_t r, std::size_t c, std::size_t ch) {
      return ex.image[(r * s.width + c) * s.channels + ch];
    };
    for (std::size_t r = 0; r < t.height; ++r) {
      for (std::size_t c = 0; c < t.width; ++c) {
        for (std::size_t ch = 0; ch < t.channels; ++ch) {
          px[(r * t.width + c) * t.channels + ch] =
              0.25 * (at(2 * r, 2 * c, ch) + at(2 * r, 2 * c + 1, ch) + at(2 * r + 1, 2 * c, ch) +
                      at(2 * r + 1, 2 * c + 1, ch));
        }
      }
    }
    out.push_back({Image(std::move(px), t), ex.label});
  }
  return out;
}

std::map<int, int> least_likely_targets(const MlpModel& model,
                                        std::span<const LabeledExample> examples) {
  const int k = model.num_classes();
  std::vector<std::vector<std::size_t>> votes(static_cast<std::size_t>(k),
                                              std::vector<std::size_t>(k, 0));
  std::vector<std::size_t> seen(static_cast<std::size_t>(k), 0);
  for (const auto& ex : examples) {
    check_goal(AttackGoal::untargeted(ex.label), k);
    const std::vector<double> p = probs(model, ex.image);
    const int least = static_cast<int>(std::min_element(p.begin(), p.end()) - p.begin());
    ++votes[ex.label][least];
    ++seen[ex.label];
  }
  std::map<int, int> out;
  for (int c = 0; c < k; ++c) {
    if (seen[c] == 0) {
      throw ConfigError("least_likely_targets: class " + std::to_string(c) + " has no examples");
    }
    out[c] = static_cast<int>(std::max_element(votes[c].begin(), votes[c].end()) -
                              votes[c].begin());
  }
  return out;
}

DatasetSplit split_indices(std::size_t n, double train_fraction, std::uint64_t rng_seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("split_indices: train_fraction outside [0,1]");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(rng_seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  DatasetSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
  s.heldout.assign(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  return s;
}

std::vector<LabeledExample> select(std::span<const LabeledExample> data,
                                   std::span<const std::size_t> indices) {
  std::vector<LabeledExample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.size()) throw ConfigError("select: index out of range");
    out.push_back(data[i]);
  }
  return out;
}

SeedPool build_seed_pool(std::span<const LabeledExample> candidates,
                         std::span<const std::uint64_t> ids, const MlpModel& target,
                         const SeedPoolConfig& cfg, std::span<const MlpModel> screen) {
  if (!ids.empty() && ids.size() != candidates.size()) {
    throw ConfigError("build_seed_pool: ids and candidates differ in length");
  }
  const int k = target.num_classes();
  std::map<int, int> targets;
  if (cfg.targeted) targets = least_likely_targets(target, candidates);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& ex = candidates[i];
    check_goal(AttackGoal::untargeted(ex.label), k);
    if (predict(target, ex.image) != ex.label) continue;
    const bool screened = std::all_of(screen.begin(), screen.end(), [&](const MlpModel& m) {
      return predict(m, ex.image) == ex.label;
    });
    if (screened) by_class[ex.label].push_back(i);
  }

  SeedPool pool;
  pool.dataset_id = cfg.dataset_id;
  pool.sampling_seed = cfg.sampling_seed;
  for (int c = 0; c < k; ++c) {
    auto& members = by_class[c];
    Rng rng = make_rng(derive_seed(cfg.sampling_seed, static_cast<std::uint64_t>(c)));
    std::shuffle(members.begin(), members.end(), rng);
    if (members.size() < cfg.per_class) pool.short_classes.push_back(c);
    const std::size_t take = std::min(members.size(), cfg.per_class);
    pool.class_counts[c] = take;
    for (std::size_t j = 0; j < take; ++j) {
      const std::size_t i = members[j];
      Seed s;
      s.id = ids.empty() ? i : ids[i];
      s.image = candidates[i].image;
      s.label = candidates[i].label;
      if (cfg.targeted) s.target = targets.at(s.label);
      pool.seeds.push_back(std::move(s));
    }
  }
  std::sort(pool.seeds.begin(), pool.seeds.end(),
            [](const Seed& a, const Seed& b) { return a.id < b.id; });
  return pool;
}

}  // namespace hyba
