#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spinline {

/// SplitMix64 step; used to derive independent substreams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes a master seed with a list of stream indices (sweep point, shot,
/// purpose tag, ...) into one well-scrambled 64-bit stream seed. The same
/// (seed, indices) always yields the same stream, independent of evaluation
/// order, which is what makes sweeps parallelizable and runs reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> indices) {
    std::uint64_t h = splitmix64(seed ^ 0x5bf03635d1d5b6a1ULL);
    for (std::uint64_t v : indices) h = splitmix64(h ^ splitmix64(v));
    return h;
}

/// RNG substream purposes. Spin-dynamics randomness and sensor randomness are
/// drawn from distinct streams so that identical pulse sequences on different
/// DQDs produce identical spin trajectories regardless of the sensing mode.
enum class Stream : std::uint64_t {
    noise = 1,   // noise realizations (quasi-static offsets, OU paths)
    born = 2,    // projective measurement sampling
    sensor = 3,  // SET signal noise
    herald = 4,  // heralded-initialization outcomes
    drift = 5,   // feedback drift processes
    generic = 6,
};

inline std::mt19937_64 make_rng(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> indices) {
    return std::mt19937_64(mix_seed(seed, indices));
}

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream purpose,
                                std::uint64_t point = 0, std::uint64_t shot = 0) {
    return make_rng(seed, {static_cast<std::uint64_t>(purpose), point, shot});
}

} // namespace spinline
