#pragma once

// Binary PNM rendering of difference maps (P6 colour, P5 grayscale).

#include <cstdint>
#include <filesystem>
#include <vector>

#include "waapo/metrics.hpp"

namespace waapo::io {

enum class Palette {
    diverging,  // P6: blue (negative) - white (0) - red (positive)
    gray,       // P5: black (negative) - mid gray (0) - white (positive)
};

struct RasterImage {
    std::size_t width = 0;   // longitude points
    std::size_t height = 0;  // latitude points, row 0 first
    bool rgb = true;
    std::vector<std::uint8_t> pixels;
};

// Symmetric colour scale centred on 0 and saturating at the clip_quantile
// quantile of |values| (linear interpolation between order statistics). If
// that quantile is 0 the scale falls back to max |value|; an all-zero map is
// uniformly mid-palette.
RasterImage rasterize(const DiffMap& map, Palette palette = Palette::diverging,
                      double clip_quantile = 0.99);

std::vector<std::uint8_t> encode_pnm(const RasterImage& image);

void render_diffmap(const DiffMap& map, const std::filesystem::path& path,
                    Palette palette = Palette::diverging, double clip_quantile = 0.99);

}  // namespace waapo::io
