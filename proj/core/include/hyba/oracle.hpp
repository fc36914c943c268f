#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "hyba/mlp.hpp"

namespace hyba {

/// Monotone count of target-model queries, attributed per seed.
/// Thread-safe.
class QueryLedger {
 public:
  QueryLedger() = default;
  QueryLedger(const QueryLedger&) = delete;
  QueryLedger& operator=(const QueryLedger&) = delete;

  void charge(std::uint64_t seed_id, std::uint64_t count = 1);
  std::uint64_t total() const;
  std::uint64_t count_for(std::uint64_t seed_id) const;
  std::map<std::uint64_t, std::uint64_t> per_seed() const;

 private:
  mutable std::mutex mutex_;
  std::uint64_t total_ = 0;
  std::map<std::uint64_t, std::uint64_t> per_seed_;
};

/// Black-box handle on a target model. Every call to query() returns the
/// full probability vector and charges exactly one query to the ledger,
/// attributed to the handle's seed id. Handles are cheap to copy; the model
/// and ledger must outlive them.
class QueryOracle {
 public:
  QueryOracle(const MlpModel& model, QueryLedger& ledger, std::uint64_t seed_id = 0)
      : model_(&model), ledger_(&ledger), seed_id_(seed_id) {}

  /// Same model and ledger, queries attributed to `seed_id`.
  QueryOracle for_seed(std::uint64_t seed_id) const { return {*model_, *ledger_, seed_id}; }

  std::vector<double> query(std::span<const double> x) const;

  std::size_t input_dim() const noexcept { return model_->input_dim(); }
  int num_classes() const noexcept { return model_->num_classes(); }
  std::uint64_t seed_id() const noexcept { return seed_id_; }
  const QueryLedger& ledger() const noexcept { return *ledger_; }
  std::uint64_t queries_so_far() const { return ledger_->total(); }

  /// Direct model access for experiment bookkeeping (pool filtering).
  /// Never used by the attacks.
  const MlpModel& unmetered_model() const noexcept { return *model_; }

 private:
  const MlpModel* model_;
  QueryLedger* ledger_;
  std::uint64_t seed_id_;
};

}  // namespace hyba
