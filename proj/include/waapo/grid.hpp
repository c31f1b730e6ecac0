#pragma once

// Dense multi-channel grids, spatial masks, channel sets and the norms / total
// variation operators used by the forecast model and the attack objective.
//
// Axis convention: the first spatial index is latitude (L points, clamped at
// the poles), the second is longitude (M points, periodic), the innermost is
// the channel (N prognostic variables). Storage is row-major over
// (lat, lon, channel). Channel indices are zero-based.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace waapo {

struct GridShape {
    std::size_t lat = 1;
    std::size_t lon = 1;
    std::size_t channels = 1;

    GridShape() = default;
    // Throws ArgumentError on a zero dimension or if L*M*N overflows size_t.
    GridShape(std::size_t lat_points, std::size_t lon_points, std::size_t channel_count);

    std::size_t cells() const { return lat * lon; }
    std::size_t size() const { return lat * lon * channels; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t n) const {
        return (i * lon + j) * channels + n;
    }

    bool operator==(const GridShape&) const = default;
    std::string str() const;
};

// One atmospheric state (or a perturbation / gradient of the same shape).
class StateGrid {
public:
    StateGrid() = default;
    explicit StateGrid(GridShape shape, double fill = 0.0);
    StateGrid(GridShape shape, std::vector<double> values);

    const GridShape& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double& operator()(std::size_t i, std::size_t j, std::size_t n) {
        return values_[shape_.index(i, j, n)];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t n) const {
        return values_[shape_.index(i, j, n)];
    }
    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }

    StateGrid& operator+=(const StateGrid& other);
    StateGrid& operator-=(const StateGrid& other);
    StateGrid& operator*=(double scale);

    bool all_finite() const;

    // Element-wise equality; distinguishes nothing beyond operator== on doubles.
    bool operator==(const StateGrid&) const = default;

private:
    GridShape shape_{};
    std::vector<double> values_;
};

StateGrid operator+(StateGrid a, const StateGrid& b);
StateGrid operator-(StateGrid a, const StateGrid& b);
StateGrid operator*(double scale, StateGrid g);

// Throws ShapeError naming `what` when the shapes differ.
void require_same_shape(const GridShape& a, const GridShape& b, const char* what);

// Per-cell weights in [0, 1] over the (lat, lon) plane.
class SpatialMask {
public:
    SpatialMask() = default;
    SpatialMask(std::size_t lat_points, std::size_t lon_points, double fill = 1.0);
    // Throws ArgumentError if any value lies outside [0, 1] or is not finite.
    SpatialMask(std::size_t lat_points, std::size_t lon_points, std::vector<double> values);

    static SpatialMask ones(const GridShape& shape) { return {shape.lat, shape.lon, 1.0}; }

    std::size_t lat() const { return lat_; }
    std::size_t lon() const { return lon_; }
    std::size_t cells() const { return values_.size(); }

    double operator()(std::size_t i, std::size_t j) const { return values_[i * lon_ + j]; }
    double operator[](std::size_t cell) const { return values_[cell]; }
    std::span<const double> values() const { return values_; }

    std::size_t count_nonzero() const;
    bool is_binary() const;
    bool matches(const GridShape& shape) const { return shape.lat == lat_ && shape.lon == lon_; }

    bool operator==(const SpatialMask&) const = default;

private:
    std::size_t lat_ = 0;
    std::size_t lon_ = 0;
    std::vector<double> values_;
};

// Sorted, duplicate-free subset of the channel indices [0, N).
class ChannelSet {
public:
    ChannelSet() = default;
    // Throws RangeError for members >= channel_count; duplicates are merged.
    ChannelSet(std::size_t channel_count, std::vector<std::size_t> members);

    static ChannelSet all(std::size_t channel_count);

    std::size_t channel_count() const { return channel_count_; }
    const std::vector<std::size_t>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool contains(std::size_t n) const;

    bool operator==(const ChannelSet&) const = default;

private:
    std::size_t channel_count_ = 0;
    std::vector<std::size_t> members_;
};

enum class LonBoundary { periodic, clamped };

double frobenius_norm(const StateGrid& g);
double squared_norm(const StateGrid& g);
double dot(const StateGrid& a, const StateGrid& b);

// max |v| over the (lat, lon) slice of channel n. Throws RangeError.
double channel_inf_norm(const StateGrid& g, std::size_t n);

// Flat index of the first cell (row-major) attaining channel_inf_norm.
std::size_t channel_inf_argmax(const StateGrid& g, std::size_t n);

// Anisotropic L1 total variation of channel n using forward differences;
// latitude never wraps, longitude wraps unless `lon` is clamped.
double total_variation(const StateGrid& g, std::size_t n,
                       LonBoundary lon = LonBoundary::periodic);

// Adds scale * d TV(channel n) / d g into `out` using sign(diff), sign(0) = 0.
void accumulate_tv_subgradient(const StateGrid& g, std::size_t n, double scale, StateGrid& out,
                               LonBoundary lon = LonBoundary::periodic);

// Binary mask with ones on [origin, origin + size). Throws BoundsError when the
// patch leaves the grid (nothing is clipped) and ArgumentError for an empty one.
SpatialMask make_patch_mask(std::size_t lat_points, std::size_t lon_points,
                            std::size_t lat_origin, std::size_t lon_origin,
                            std::size_t lat_size, std::size_t lon_size);

// Widens the fully-on region of `mask` by a raised-cosine ramp of
// `taper_cells` cells (Chebyshev distance, periodic in longitude). A cell at
// distance d from the nearest value-1 cell gets 0.5 * (1 + cos(pi d / (taper + 1))).
SpatialMask smooth_patch_mask(const SpatialMask& mask, std::size_t taper_cells);

// Multiplies every channel of g by the mask, cellwise.
StateGrid apply_mask(const StateGrid& g, const SpatialMask& mask);

}  // namespace waapo
