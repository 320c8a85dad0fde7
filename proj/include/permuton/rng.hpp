#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace permuton {

/// The generator threaded explicitly through every sampler.
using Engine = std::mt19937_64;

/// splitmix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed derivation. The result depends only on the master seed
/// and the coordinates, never on the order in which trials are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> coords) noexcept {
    std::uint64_t h = mix64(master);
    for (std::uint64_t c : coords) {
        h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    }
    return h;
}

/// Uniform double in [0, 1) built from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Bernoulli(p) draw; exact at p = 0 and p = 1.
inline bool bernoulli(Engine& rng, double p) {
    return to_unit(rng()) < p;
}

/// Uniform integer in [lo, hi].
template <class Int>
Int uniform_int(Engine& rng, Int lo, Int hi) {
    return std::uniform_int_distribution<Int>(lo, hi)(rng);
}

}  // namespace permuton
