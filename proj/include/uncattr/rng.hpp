#pragma once

#include <cstdint>
#include <random>

namespace uncattr {

// splitmix64 step; used to derive independent child seeds from (seed, index)
// so per-sample work is reproducible regardless of worker count.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

// Deterministic standard normal (Box-Muller-free polar method would consume a
// variable number of draws; std::normal_distribution is deterministic per
// engine state on a fixed stdlib, which is all the determinism contract needs).
inline double draw_normal(std::mt19937_64& eng) {
    static thread_local std::normal_distribution<double> dist(0.0, 1.0);
    dist.reset();
    return dist(eng);
}

}  // namespace uncattr
