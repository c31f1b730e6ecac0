#include "waapo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "waapo/errors.hpp"

namespace waapo {

GridShape::GridShape(std::size_t lat_points, std::size_t lon_points, std::size_t channel_count)
    : lat(lat_points), lon(lon_points), channels(channel_count) {
    if (lat == 0 || lon == 0 || channels == 0) {
        throw ArgumentError("grid dimensions must be >= 1, got " + str());
    }
    constexpr auto max = std::numeric_limits<std::size_t>::max();
    if (lat > max / lon || lat * lon > max / channels) {
        throw ArgumentError("grid " + str() + " overflows the index range");
    }
}

std::string GridShape::str() const {
    std::ostringstream os;
    os << lat << "x" << lon << "x" << channels;
    return os.str();
}

StateGrid::StateGrid(GridShape shape, double fill) : shape_(shape), values_(shape.size(), fill) {}

StateGrid::StateGrid(GridShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
    if (values_.size() != shape_.size()) {
        throw ShapeError("grid " + shape_.str() + " needs " + std::to_string(shape_.size()) +
                         " values, got " + std::to_string(values_.size()));
    }
}

StateGrid& StateGrid::operator+=(const StateGrid& other) {
    require_same_shape(shape_, other.shape_, "grid addition");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
}

StateGrid& StateGrid::operator-=(const StateGrid& other) {
    require_same_shape(shape_, other.shape_, "grid subtraction");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

StateGrid& StateGrid::operator*=(double scale) {
    for (double& v : values_) v *= scale;
    return *this;
}

bool StateGrid::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

StateGrid operator+(StateGrid a, const StateGrid& b) { return a += b; }
StateGrid operator-(StateGrid a, const StateGrid& b) { return a -= b; }
StateGrid operator*(double scale, StateGrid g) { return g *= scale; }

void require_same_shape(const GridShape& a, const GridShape& b, const char* what) {
    if (!(a == b)) {
        throw ShapeError(std::string(what) + ": shape " + a.str() + " vs " + b.str());
    }
}

SpatialMask::SpatialMask(std::size_t lat_points, std::size_t lon_points, double fill)
    : SpatialMask(lat_points, lon_points, std::vector<double>(lat_points * lon_points, fill)) {}

SpatialMask::SpatialMask(std::size_t lat_points, std::size_t lon_points, std::vector<double> values)
    : lat_(lat_points), lon_(lon_points), values_(std::move(values)) {
    if (values_.size() != lat_ * lon_) {
        throw ShapeError("mask " + std::to_string(lat_) + "x" + std::to_string(lon_) + " needs " +
                         std::to_string(lat_ * lon_) + " values");
    }
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("mask values must lie in [0, 1]");
    }
}

std::size_t SpatialMask::count_nonzero() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

bool SpatialMask::is_binary() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return v == 0.0 || v == 1.0; });
}

ChannelSet::ChannelSet(std::size_t channel_count, std::vector<std::size_t> members)
    : channel_count_(channel_count), members_(std::move(members)) {
    for (std::size_t n : members_) {
        if (n >= channel_count_) {
            throw RangeError("channel " + std::to_string(n) + " outside [0, " +
                             std::to_string(channel_count_) + ")");
        }
    }
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

ChannelSet ChannelSet::all(std::size_t channel_count) {
    std::vector<std::size_t> members(channel_count);
    for (std::size_t n = 0; n < channel_count; ++n) members[n] = n;
    return {channel_count, std::move(members)};
}

bool ChannelSet::contains(std::size_t n) const {
    return std::binary_search(members_.begin(), members_.end(), n);
}

double squared_norm(const StateGrid& g) {
    double sum = 0.0;
    for (double v : g.values()) sum += v * v;
    return sum;
}

double frobenius_norm(const StateGrid& g) { return std::sqrt(squared_norm(g)); }

double dot(const StateGrid& a, const StateGrid& b) {
    require_same_shape(a.shape(), b.shape(), "dot product");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
    return sum;
}

namespace {

void check_channel(const GridShape& shape, std::size_t n) {
    if (n >= shape.channels) {
        throw RangeError("channel " + std::to_string(n) + " outside [0, " +
                         std::to_string(shape.channels) + ")");
    }
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::size_t channel_inf_argmax(const StateGrid& g, std::size_t n) {
    const GridShape& s = g.shape();
    check_channel(s, n);
    std::size_t best = n;
    double best_abs = -1.0;
    for (std::size_t cell = 0; cell < s.cells(); ++cell) {
        const std::size_t k = cell * s.channels + n;
        const double a = std::abs(g[k]);
        if (a > best_abs) {
            best_abs = a;
            best = k;
        }
    }
    return best;
}

double channel_inf_norm(const StateGrid& g, std::size_t n) {
    return std::abs(g[channel_inf_argmax(g, n)]);
}

double total_variation(const StateGrid& g, std::size_t n, LonBoundary lon) {
    const GridShape& s = g.shape();
    check_channel(s, n);
    double tv = 0.0;
    for (std::size_t i = 0; i < s.lat; ++i) {
        for (std::size_t j = 0; j < s.lon; ++j) {
            const double v = g(i, j, n);
            if (i + 1 < s.lat) tv += std::abs(g(i + 1, j, n) - v);
            if (j + 1 < s.lon) {
                tv += std::abs(g(i, j + 1, n) - v);
            } else if (lon == LonBoundary::periodic) {
                tv += std::abs(g(i, 0, n) - v);
            }
        }
    }
    return tv;
}

void accumulate_tv_subgradient(const StateGrid& g, std::size_t n, double scale, StateGrid& out,
                               LonBoundary lon) {
    const GridShape& s = g.shape();
    check_channel(s, n);
    require_same_shape(s, out.shape(), "TV subgradient");
    // d|b - a| = sign(b - a) (db - da)
    auto add_pair = [&](std::size_t ka, std::size_t kb) {
        const double w = scale * sign(g[kb] - g[ka]);
        out[kb] += w;
        out[ka] -= w;
    };
    for (std::size_t i = 0; i < s.lat; ++i) {
        for (std::size_t j = 0; j < s.lon; ++j) {
            const std::size_t k = s.index(i, j, n);
            if (i + 1 < s.lat) add_pair(k, s.index(i + 1, j, n));
            if (j + 1 < s.lon) {
                add_pair(k, s.index(i, j + 1, n));
            } else if (lon == LonBoundary::periodic) {
                add_pair(k, s.index(i, 0, n));
            }
        }
    }
}

SpatialMask make_patch_mask(std::size_t lat_points, std::size_t lon_points,
                            std::size_t lat_origin, std::size_t lon_origin,
                            std::size_t lat_size, std::size_t lon_size) {
    if (lat_size == 0 || lon_size == 0) throw ArgumentError("patch size must be at least 1x1");
    if (lat_origin > lat_points || lat_size > lat_points - lat_origin || lon_origin > lon_points ||
        lon_size > lon_points - lon_origin) {
        std::ostringstream os;
        os << "patch origin (" << lat_origin << ", " << lon_origin << ") size (" << lat_size
           << ", " << lon_size << ") exceeds grid " << lat_points << "x" << lon_points;
        throw BoundsError(os.str());
    }
    std::vector<double> values(lat_points * lon_points, 0.0);
    for (std::size_t i = lat_origin; i < lat_origin + lat_size; ++i) {
        for (std::size_t j = lon_origin; j < lon_origin + lon_size; ++j) {
            values[i * lon_points + j] = 1.0;
        }
    }
    return {lat_points, lon_points, std::move(values)};
}

SpatialMask smooth_patch_mask(const SpatialMask& mask, std::size_t taper_cells) {
    if (taper_cells == 0) return mask;
    const std::size_t L = mask.lat();
    const std::size_t M = mask.lon();
    const auto t = static_cast<std::ptrdiff_t>(taper_cells);
    const double width = static_cast<double>(taper_cells + 1);

    std::vector<double> out(mask.values().begin(), mask.values().end());
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
            if (out[i * M + j] == 1.0) continue;
            // Smallest Chebyshev distance to a fully-on cell within the taper window.
            std::ptrdiff_t nearest = t + 1;
            for (std::ptrdiff_t di = -t; di <= t; ++di) {
                const auto ii = static_cast<std::ptrdiff_t>(i) + di;
                if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(L)) continue;
                for (std::ptrdiff_t dj = -t; dj <= t; ++dj) {
                    const auto m = static_cast<std::ptrdiff_t>(M);
                    const auto jj = ((static_cast<std::ptrdiff_t>(j) + dj) % m + m) % m;
                    if (mask(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj)) == 1.0) {
                        nearest = std::min(nearest, std::max(std::abs(di), std::abs(dj)));
                    }
                }
            }
            if (nearest <= t) {
                const double ramp =
                    0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(nearest) / width));
                out[i * M + j] = std::max(out[i * M + j], ramp);
            }
        }
    }
    return {L, M, std::move(out)};
}

StateGrid apply_mask(const StateGrid& g, const SpatialMask& mask) {
    const GridShape& s = g.shape();
    if (!mask.matches(s)) {
        throw ShapeError("mask " + std::to_string(mask.lat()) + "x" + std::to_string(mask.lon()) +
                         " does not match grid " + s.str());
    }
    StateGrid out = g;
    for (std::size_t cell = 0; cell < s.cells(); ++cell) {
        for (std::size_t n = 0; n < s.channels; ++n) {
            double& v = out[cell * s.channels + n];
            v = mask[cell] == 0.0 ? 0.0 : v * mask[cell];
        }
    }
    return out;
}

}  // namespace waapo
