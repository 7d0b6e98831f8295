#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace seld {

// Deterministic seed derivation: master seed -> stage seed -> per-item seed.
// Built on splitmix64 finalization over FNV-1a hashes of the labels, so the
// seed of one item never depends on how many other items exist or in which
// order workers pick them up.
std::uint64_t fnv1a64(std::string_view s);

std::uint64_t splitmix64(std::uint64_t x);

// Combines a parent seed with a label ("acs", "file:fold1_room1_mix001", ...).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace seld
