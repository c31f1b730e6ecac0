#include "waapo/io/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "waapo/errors.hpp"
#include "waapo/metrics.hpp"
#include "waapo/rng.hpp"

namespace waapo::io {

namespace {

// Smoothing weight with a non-negative spectrum (1 - w * lambda, lambda <= 8).
constexpr double kSmoothingWeight = 0.125;

void smooth_once(StateGrid& g) {
    const GridShape& s = g.shape();
    StateGrid out(s);
    const double c = 1.0 - 4.0 * kSmoothingWeight;
    for (std::size_t i = 0; i < s.lat; ++i) {
        const std::size_t north = i > 0 ? i - 1 : i;
        const std::size_t south = i + 1 < s.lat ? i + 1 : i;
        for (std::size_t j = 0; j < s.lon; ++j) {
            const std::size_t west = j > 0 ? j - 1 : s.lon - 1;
            const std::size_t east = j + 1 < s.lon ? j + 1 : 0;
            for (std::size_t n = 0; n < s.channels; ++n) {
                out(i, j, n) = c * g(i, j, n) + kSmoothingWeight * (g(north, j, n) + g(south, j, n) +
                                                                    g(i, west, n) + g(i, east, n));
            }
        }
    }
    g = std::move(out);
}

void standardize(StateGrid& g) {
    const GridShape& s = g.shape();
    const double cells = static_cast<double>(s.cells());
    for (std::size_t n = 0; n < s.channels; ++n) {
        double mean = 0.0;
        for (std::size_t cell = 0; cell < s.cells(); ++cell) mean += g[cell * s.channels + n];
        mean /= cells;
        double var = 0.0;
        for (std::size_t cell = 0; cell < s.cells(); ++cell) {
            double& v = g[cell * s.channels + n];
            v -= mean;
            var += v * v;
        }
        var /= cells;
        // A constant channel (e.g. a 1x1 grid) stays at zero.
        const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
        for (std::size_t cell = 0; cell < s.cells(); ++cell) g[cell * s.channels + n] *= inv;
    }
}

StateGrid smooth_random(const GridShape& shape, std::uint64_t seed, std::size_t passes) {
    StateGrid g = raw_noise(shape, seed);
    for (std::size_t k = 0; k < passes; ++k) smooth_once(g);
    standardize(g);
    return g;
}

}  // namespace

InitialStyle parse_initial_style(const std::string& name) {
    if (name == "smooth-random") return InitialStyle::smooth_random;
    if (name == "zonal-bands") return InitialStyle::zonal_bands;
    throw ConfigError("unknown initial style '" + name + "' (smooth-random | zonal-bands)");
}

std::string to_string(InitialStyle style) {
    return style == InitialStyle::smooth_random ? "smooth-random" : "zonal-bands";
}

StateGrid raw_noise(const GridShape& shape, std::uint64_t seed) {
    return gaussian_field(shape, stream_seed(seed, 1));
}

StateGrid gen_synthetic_initial(const GridShape& shape, std::uint64_t seed,
                                const SyntheticOptions& options) {
    StateGrid anomaly = smooth_random(shape, seed, options.smoothing_passes);
    if (options.style == InitialStyle::smooth_random) return anomaly;

    if (!(options.anomaly_scale >= 0.0)) throw ArgumentError("anomaly_scale must be >= 0");
    // cos((n + 1) pi phi) over phi in (0, 1): channel n has n + 1 zonal bands.
    StateGrid bands(shape);
    for (std::size_t i = 0; i < shape.lat; ++i) {
        const double phi = (static_cast<double>(i) + 0.5) / static_cast<double>(shape.lat);
        for (std::size_t j = 0; j < shape.lon; ++j) {
            for (std::size_t n = 0; n < shape.channels; ++n) {
                bands(i, j, n) = std::cos(static_cast<double>(n + 1) * std::numbers::pi * phi);
            }
        }
    }
    standardize(bands);
    anomaly *= options.anomaly_scale;
    bands += anomaly;
    standardize(bands);
    return bands;
}

}  // namespace waapo::io
