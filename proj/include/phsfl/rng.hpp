#pragma once

#include <cstdint>
#include <random>

namespace phsfl {

using Rng = std::mt19937_64;

/// splitmix64 step; used to whiten seeds before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministically derives an independent stream seed from a base seed
/// and up to two stream tags (client id, purpose, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a = 0,
                                 std::uint64_t tag_b = 0) {
    std::uint64_t s = base;
    std::uint64_t x = splitmix64(s);
    s ^= tag_a + 0x632be59bd9b4e019ULL;
    x ^= splitmix64(s);
    s ^= tag_b + 0x2545f4914f6cdd1dULL;
    x ^= splitmix64(s);
    return x;
}

inline Rng make_rng(std::uint64_t base, std::uint64_t tag_a = 0, std::uint64_t tag_b = 0) {
    return Rng(derive_seed(base, tag_a, tag_b));
}

}  // namespace phsfl
