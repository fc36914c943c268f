#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hyba/goal.hpp"
#include "hyba/image.hpp"
#include "hyba/mlp.hpp"

namespace hyba {

/// Gaussian blobs in [0,1]^dim, one centroid per class, `n` examples dealt
/// round-robin over classes. The noise scale puts half the smallest centroid
/// distance at `separation` standard deviations.
std::vector<LabeledExample> make_synthetic(std::size_t n, int classes, std::size_t dim,
                                           double separation, std::uint64_t rng_seed);

/// 2x2 mean pooling per channel; odd trailing rows/columns are dropped.
std::vector<LabeledExample> downsample_2x2(std::span<const LabeledExample> data);

/// Per class: the mode over its examples of the least probable class
/// (lowest index on ties). Every class in `num_classes` must appear.
std::map<int, int> least_likely_targets(const MlpModel& model,
                                        std::span<const LabeledExample> examples);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

/// Seeded shuffle of [0, n) cut at round(n * train_fraction).
DatasetSplit split_indices(std::size_t n, double train_fraction, std::uint64_t rng_seed);

std::vector<LabeledExample> select(std::span<const LabeledExample> data,
                                   std::span<const std::size_t> indices);

struct SeedPool {
  std::vector<Seed> seeds;
  std::map<int, std::size_t> class_counts;
  std::string dataset_id;
  std::uint64_t sampling_seed = 0;
  /// Classes that could not supply `per_class` correctly classified seeds.
  std::vector<int> short_classes;
};

struct SeedPoolConfig {
  std::size_t per_class = 100;
  bool targeted = false;
  std::uint64_t sampling_seed = 0;
  std::string dataset_id;
};

/// Samples up to `per_class` seeds per class among the candidates that
/// `target` classifies correctly. Seed ids are the candidates' indices in
/// `ids` (or positions when `ids` is empty). Targeted pools use the target's
/// least-likely class per source class. Every model in `screen` must also
/// classify a candidate correctly for it to qualify.
SeedPool build_seed_pool(std::span<const LabeledExample> candidates,
                         std::span<const std::uint64_t> ids, const MlpModel& target,
                         const SeedPoolConfig& cfg, std::span<const MlpModel> screen = {});

}  // namespace hyba
