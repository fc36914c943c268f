#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hyba {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a master seed and a stream id.
/// Streams for distinct ids do not depend on the order in which they are
/// requested, so per-seed work can be reordered or run in parallel.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

/// Three-level variant, e.g. (master, seed_id, iteration).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// 64-bit FNV-1a over a byte string. Used for config and model hashes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace hyba
