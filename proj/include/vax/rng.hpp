#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vax {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Engine for an independent stream keyed by (seed, k1, k2, ...). Streams
/// depend only on their keys, never on scheduling.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
    std::uint64_t h = splitmix64(seed);
    for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(h);
}

}  // namespace vax
