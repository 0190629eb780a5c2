#pragma once

#include <boost/random/mersenne_twister.hpp>

#include <cstdint>

namespace tsch {

/// boost.random engines and distributions produce the same streams on every
/// platform, which std:: distributions do not guarantee.
using Rng = boost::random::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent stream for (seed, node, purpose).
inline Rng deriveRng(std::uint64_t seed, std::uint64_t node, std::uint64_t purpose) {
    return Rng{splitmix64(splitmix64(splitmix64(seed) ^ node) ^ (purpose * 0xD6E8FEB86659FD93ULL))};
}

} // namespace tsch
