#include "hyba/oracle.hpp"

namespace hyba {

void QueryLedger::charge(std::uint64_t seed_id, std::uint64_t count) {
  std::lock_guard lock(mutex_);
  total_ += count;
  per_seed_[seed_id] += count;
}

std::uint64_t QueryLedger::total() const {
  std::lock_guard lock(mutex_);
  return total_;
}

std::uint64_t QueryLedger::count_for(std::uint64_t seed_id) const {
  std::lock_guard lock(mutex_);
  const auto it = per_seed_.find(seed_id);
  return it == per_seed_.end() ? 0 : it->second;
}

std::map<std::uint64_t, std::uint64_t> QueryLedger::per_seed() const {
  std::lock_guard lock(mutex_);
  return per_seed_;
}

std::vector<double> QueryOracle::query(std::span<const double> x) const {
  std::vector<double> p = probs(*model_, x);
  ledger_->charge(seed_id_);
  return p;
}

}  // namespace hyba
