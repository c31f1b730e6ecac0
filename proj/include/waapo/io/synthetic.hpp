#pragma once

// Seeded synthetic initial states standing in for reanalysis samples.

#include <cstddef>
#include <cstdint>
#include <string>

#include "waapo/grid.hpp"

namespace waapo::io {

enum class InitialStyle {
    // N(0, 1) noise low-pass filtered by repeated 5-point smoothing.
    smooth_random,
    // A seed-independent latitudinal profile per channel plus a smooth-random
    // anomaly of relative amplitude anomaly_scale. Two seeds share the
    // "climatology" and differ only in their anomalies.
    zonal_bands,
};

struct SyntheticOptions {
    InitialStyle style = InitialStyle::smooth_random;
    std::size_t smoothing_passes = 8;
    double anomaly_scale = 0.3;

    bool operator==(const SyntheticOptions&) const = default;
};

InitialStyle parse_initial_style(const std::string& name);  // throws ConfigError
std::string to_string(InitialStyle style);

// Noise before smoothing, for comparisons.
StateGrid raw_noise(const GridShape& shape, std::uint64_t seed);

// Every channel is normalised to zero mean and unit (population) variance.
StateGrid gen_synthetic_initial(const GridShape& shape, std::uint64_t seed,
                                const SyntheticOptions& options = {});

}  // namespace waapo::io
