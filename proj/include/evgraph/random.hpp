#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace evgraph {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Named substream of a master seed. Same inputs always give the same seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = splitmix64(master);
    for (unsigned char c : stream) h = splitmix64(h ^ c);
    for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
    return h;
}

/// Uniform double in [0, 1) from 53 random bits; unlike std::uniform_real_distribution
/// the mapping is fixed, so streams are reproducible across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % n;
}

/// Fisher-Yates with uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        auto j = uniform_index(rng, i);
        std::swap(first[i - 1], first[j]);
    }
}

} // namespace evgraph
