#include "waapo/io/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "waapo/errors.hpp"
#include "waapo/io/grid_file.hpp"

namespace waapo::io {

namespace {

double abs_quantile(const std::vector<double>& values, double q) {
    std::vector<double> mags(values.size());
    std::transform(values.begin(), values.end(), mags.begin(), [](double v) { return std::abs(v); });
    std::sort(mags.begin(), mags.end());
    const double pos = q * static_cast<double>(mags.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, mags.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return mags[lo] + frac * (mags[hi] - mags[lo]);
}

std::uint8_t level(double x) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 255.0)));
}

}  // namespace

RasterImage rasterize(const DiffMap& map, Palette palette, double clip_quantile) {
    if (map.values.size() != map.lat * map.lon || map.values.empty()) {
        throw ShapeError("diff map values do not match its dimensions");
    }
    if (!(clip_quantile > 0.0 && clip_quantile <= 1.0)) {
        throw ArgumentError("clip quantile must lie in (0, 1]");
    }
    for (double v : map.values) {
        if (!std::isfinite(v)) throw ArgumentError("diff map has non-finite values");
    }
    double scale = abs_quantile(map.values, clip_quantile);
    if (scale == 0.0) scale = abs_quantile(map.values, 1.0);

    RasterImage img;
    img.width = map.lon;
    img.height = map.lat;
    img.rgb = palette == Palette::diverging;
    img.pixels.reserve(map.values.size() * (img.rgb ? 3 : 1));
    for (double v : map.values) {
        const double t = scale > 0.0 ? std::clamp(v / scale, -1.0, 1.0) : 0.0;
        if (img.rgb) {
            const double fade = 255.0 * (1.0 - std::abs(t));
            if (t >= 0.0) {
                img.pixels.insert(img.pixels.end(), {255, level(fade), level(fade)});
            } else {
                img.pixels.insert(img.pixels.end(), {level(fade), level(fade), 255});
            }
        } else {
            img.pixels.push_back(level(128.0 + 127.0 * t));
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_pnm(const RasterImage& image) {
    const std::string header = std::string(image.rgb ? "P6" : "P5") + "\n" +
                               std::to_string(image.width) + " " + std::to_string(image.height) +
                               "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

void render_diffmap(const DiffMap& map, const std::filesystem::path& path, Palette palette,
                    double clip_quantile) {
    write_file(path, encode_pnm(rasterize(map, palette, clip_quantile)));
}

}  // namespace waapo::io
