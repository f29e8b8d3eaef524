#pragma once
// Seed derivation. One experiment seed fans out into independent streams
// (partition shuffle, train/test split, feature sampling per node, ...) so
// that changing one consumer never perturbs another, and paired method
// comparisons see identical data splits.

#include <cstdint>
#include <random>

namespace dekrr {

// Stateless 64-bit mixer (splitmix64 finalizer).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  partition = 1,   // row shuffle for balanced/imbalanced partitions
  split = 2,       // per-node train/test split
  plain_features = 3,
  candidate_features = 4,
  probe = 5,       // consensus probe set
  folds = 6,       // cross-validation folds
  synthetic = 7,   // synthetic data generation in tests/tools
};

inline std::uint64_t derive_seed(std::uint64_t experiment_seed, Stream s,
                                 std::uint64_t id = 0) {
  std::uint64_t h = splitmix64(experiment_seed ^
                               0x517cc1b727220a95ull * static_cast<std::uint64_t>(s));
  return splitmix64(h + id);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace dekrr
