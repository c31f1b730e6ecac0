#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "waapo/grid.hpp"
#include "waapo/rng.hpp"

namespace waapo::testing {

inline StateGrid random_grid(const GridShape& shape, std::uint64_t seed, double scale = 1.0) {
    NormalStream rng(seed);
    StateGrid g(shape);
    for (double& v : g.values()) v = scale * rng.normal();
    return g;
}

// Channel slice as a plain (lat, lon) array, for loop-based oracles.
inline std::vector<std::vector<double>> slice(const StateGrid& g, std::size_t n) {
    const GridShape& s = g.shape();
    std::vector<std::vector<double>> out(s.lat, std::vector<double>(s.lon));
    for (std::size_t i = 0; i < s.lat; ++i) {
        for (std::size_t j = 0; j < s.lon; ++j) out[i][j] = g(i, j, n);
    }
    return out;
}

inline bool bitwise_equal(const StateGrid& a, const StateGrid& b) {
    if (!(a.shape() == b.shape())) return false;
    return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace waapo::testing
