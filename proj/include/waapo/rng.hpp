#pragma once

// Portable seeded random streams.
//
// std::mt19937_64 is bit-specified by the standard, but the standard
// distributions are not, so uniforms and normals are derived here by fixed
// formulas: uniform = top 53 bits / 2^53, normal = Box-Muller (cosine branch
// first, sine branch cached). Substreams are keyed by SplitMix64 mixing of
// (base seed, stream index), so member k of an ensemble draws the same values
// whether members run serially or in parallel.

#include <cstdint>
#include <random>

namespace waapo {

// One SplitMix64 output step (Steele, Lea, Flood 2014) applied to `x`.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed of substream `stream` under `base`.
constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal();

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace waapo
