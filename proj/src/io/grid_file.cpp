#include "waapo/io/grid_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "waapo/errors.hpp"

namespace waapo::io {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    for (std::size_t b = 0; b < sizeof(T); ++b) {
        out.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
    }
}

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, const std::string& source)
        : bytes_(bytes), source_(source) {}

    template <typename T>
    T get(const char* field) {
        need(sizeof(T), field);
        T value = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) {
            value |= static_cast<T>(static_cast<T>(bytes_[pos_ + b]) << (8 * b));
        }
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string(std::size_t length, const char* field) {
        need(length, field);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), length);
        pos_ += length;
        return s;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(source_ + ": " + what);
    }

private:
    void need(std::size_t n, const char* field) const {
        if (remaining() < n) {
            fail(std::string("truncated header while reading ") + field + " at byte " +
                 std::to_string(pos_));
        }
    }

    std::span<const std::uint8_t> bytes_;
    const std::string& source_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_grid(const StateGrid& grid,
                                      const std::vector<std::string>& channel_names, DType dtype) {
    const GridShape& s = grid.shape();
    if (channel_names.size() != s.channels) {
        throw ArgumentError("grid has " + std::to_string(s.channels) + " channels but " +
                            std::to_string(channel_names.size()) + " names were given");
    }
    constexpr auto u32max = std::numeric_limits<std::uint32_t>::max();
    if (s.lat > u32max || s.lon > u32max || s.channels > u32max) {
        throw ArgumentError("grid dimensions exceed the u32 header fields");
    }
    std::vector<std::uint8_t> out(std::begin(kGridMagic), std::end(kGridMagic));
    put_le<std::uint16_t>(out, kGridVersion);
    put_le<std::uint8_t>(out, kAxisLatLonChan);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.lat));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.lon));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.channels));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    for (const auto& name : channel_names) {
        if (name.size() > u32max) throw ArgumentError("channel name too long");
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
    }
    out.reserve(out.size() + s.size() * (dtype == DType::f32 ? 4 : 8));
    for (double v : grid.values()) {
        if (dtype == DType::f32) {
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        } else {
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

GridFileHeader decode_grid_header(std::span<const std::uint8_t> bytes, const std::string& source) {
    Reader in(bytes, source);
    if (bytes.size() < sizeof(kGridMagic) ||
        std::memcmp(bytes.data(), kGridMagic, sizeof(kGridMagic)) != 0) {
        in.fail("not a WAAPOGRD grid file (bad magic)");
    }
    in.get_string(sizeof(kGridMagic), "magic");
    GridFileHeader h;
    h.version = in.get<std::uint16_t>("version");
    if (h.version != kGridVersion) in.fail("unsupported version " + std::to_string(h.version));
    const auto axis = in.get<std::uint8_t>("axis order");
    if (axis != kAxisLatLonChan) in.fail("unsupported axis order " + std::to_string(axis));
    const auto lat = in.get<std::uint32_t>("L");
    const auto lon = in.get<std::uint32_t>("M");
    const auto channels = in.get<std::uint32_t>("N");
    if (lat == 0 || lon == 0 || channels == 0) in.fail("zero grid dimension");
    try {
        h.shape = GridShape(lat, lon, channels);
    } catch (const ArgumentError& e) {
        in.fail(e.what());
    }
    if (h.shape.size() > std::numeric_limits<std::size_t>::max() / 8) {
        in.fail("grid " + h.shape.str() + " is too large");
    }
    const auto dtype = in.get<std::uint8_t>("dtype");
    if (dtype > 1) in.fail("unsupported dtype " + std::to_string(dtype));
    h.dtype = static_cast<DType>(dtype);
    h.channel_names.reserve(channels);
    for (std::uint32_t n = 0; n < channels; ++n) {
        const auto length = in.get<std::uint32_t>("channel name length");
        h.channel_names.push_back(in.get_string(length, "channel name"));
    }
    h.payload_offset = in.position();
    const std::size_t expected = h.payload_bytes();
    const std::size_t actual = in.remaining();
    if (actual != expected) {
        in.fail("payload holds " + std::to_string(actual) + " bytes, expected " +
                std::to_string(expected) + " for " + h.shape.str() + " " +
                (h.dtype == DType::f32 ? "f32" : "f64"));
    }
    return h;
}

LoadedGrid decode_grid(std::span<const std::uint8_t> bytes, const std::string& source) {
    GridFileHeader h = decode_grid_header(bytes, source);
    std::vector<double> values(h.shape.size());
    const std::uint8_t* p = bytes.data() + h.payload_offset;
    for (double& v : values) {
        if (h.dtype == DType::f32) {
            std::uint32_t raw = 0;
            for (int b = 0; b < 4; ++b) raw |= static_cast<std::uint32_t>(p[b]) << (8 * b);
            v = static_cast<double>(std::bit_cast<float>(raw));
            p += 4;
        } else {
            std::uint64_t raw = 0;
            for (int b = 0; b < 8; ++b) raw |= static_cast<std::uint64_t>(p[b]) << (8 * b);
            v = std::bit_cast<double>(raw);
            p += 8;
        }
    }
    return {StateGrid(h.shape, std::move(values)), std::move(h.channel_names), h.dtype};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error while reading " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("error while writing " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void save_grid(const std::filesystem::path& path, const StateGrid& grid,
               const std::vector<std::string>& channel_names, DType dtype) {
    write_file(path, encode_grid(grid, channel_names, dtype));
}

LoadedGrid load_grid(const std::filesystem::path& path) {
    return decode_grid(read_file(path), path.string());
}

GridFileHeader read_grid_header(const std::filesystem::path& path) {
    return decode_grid_header(read_file(path), path.string());
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                     const std::vector<std::string>& channel_names, DType dtype) {
    const GridShape& s = traj.initial.shape();
    if (channel_names.size() != s.channels) {
        throw ArgumentError("trajectory channel names do not match the grid");
    }
    const std::size_t steps = traj.horizon() + 1;
    StateGrid stacked(GridShape(s.lat, s.lon, s.channels * steps));
    std::vector<std::string> names;
    for (std::size_t t = 0; t < steps; ++t) {
        for (const auto& name : channel_names) names.push_back(name + "@t" + std::to_string(t));
    }
    for (std::size_t t = 0; t < steps; ++t) {
        const StateGrid& z = traj.at(t);
        for (std::size_t cell = 0; cell < s.cells(); ++cell) {
            for (std::size_t n = 0; n < s.channels; ++n) {
                stacked[cell * s.channels * steps + t * s.channels + n] = z[cell * s.channels + n];
            }
        }
    }
    save_grid(path, stacked, names, dtype);
}

void save_coupling(const std::filesystem::path& path, const CouplingMatrix& coupling) {
    const std::size_t n = coupling.size();
    save_grid(path, StateGrid(GridShape(n, n, 1), coupling.data()), {"coupling"});
}

CouplingMatrix load_coupling(const std::filesystem::path& path) {
    LoadedGrid g = load_grid(path);
    const GridShape& s = g.grid.shape();
    if (s.lat != s.lon || s.channels != 1 || g.channel_names.front() != "coupling") {
        throw FormatError(path.string() + ": not a coupling matrix file");
    }
    return {s.lat, std::vector<double>(g.grid.values().begin(), g.grid.values().end())};
}

}  // namespace waapo::io
