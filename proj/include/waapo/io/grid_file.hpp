#pragma once

// Binary grid container. All integers and samples are little-endian.
//
//   offset  size  field
//   0       8     magic "WAAPOGRD"
//   8       2     u16 version (= 1)
//   10      1     u8 axis order (0 = lat, lon, channel)
//   11      12    u32 L, u32 M, u32 N
//   23      1     u8 dtype (0 = f32, 1 = f64)
//   24      ...   N channel names, each u32 byte length + UTF-8 bytes
//   ...     ...   payload, L*M*N samples row-major over (lat, lon, channel)
//
// The file ends exactly at the end of the payload.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "waapo/grid.hpp"
#include "waapo/surrogate.hpp"

namespace waapo::io {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

inline constexpr char kGridMagic[8] = {'W', 'A', 'A', 'P', 'O', 'G', 'R', 'D'};
inline constexpr std::uint16_t kGridVersion = 1;
inline constexpr std::uint8_t kAxisLatLonChan = 0;

struct GridFileHeader {
    std::uint16_t version = kGridVersion;
    GridShape shape;
    DType dtype = DType::f64;
    std::vector<std::string> channel_names;
    std::size_t payload_offset = 0;

    std::size_t sample_bytes() const { return dtype == DType::f32 ? 4 : 8; }
    std::size_t payload_bytes() const { return shape.size() * sample_bytes(); }
};

struct LoadedGrid {
    StateGrid grid;
    std::vector<std::string> channel_names;
    DType dtype = DType::f64;
};

std::vector<std::uint8_t> encode_grid(const StateGrid& grid,
                                      const std::vector<std::string>& channel_names,
                                      DType dtype = DType::f64);

// Throws FormatError on bad magic, unsupported version / axis order / dtype,
// truncation or trailing bytes. `source` names the input in messages.
GridFileHeader decode_grid_header(std::span<const std::uint8_t> bytes, const std::string& source);
LoadedGrid decode_grid(std::span<const std::uint8_t> bytes, const std::string& source);

// Throws IoError with the path on failure.
void save_grid(const std::filesystem::path& path, const StateGrid& grid,
               const std::vector<std::string>& channel_names, DType dtype = DType::f64);
LoadedGrid load_grid(const std::filesystem::path& path);
GridFileHeader read_grid_header(const std::filesystem::path& path);

// Z_0 .. Z_T stacked along the channel axis, names "<channel>@t<k>".
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                     const std::vector<std::string>& channel_names, DType dtype = DType::f64);

// Coupling matrix as an N x N x 1 grid with channel name "coupling".
void save_coupling(const std::filesystem::path& path, const CouplingMatrix& coupling);
CouplingMatrix load_coupling(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace waapo::io
