#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "uol/grid.hpp"

namespace uol {

// Binary layout: "UOL1", nx and ny as little-endian u64, h, origin.x, origin.y
// as little-endian f64, then nx*ny row-major f64 values.

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw Error("truncated UOL1 stream");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace detail

inline void write_field(std::ostream& os, const ScalarField& u) {
    const GridSpec& s = u.spec();
    os.write("UOL1", 4);
    detail::put_u64(os, s.nx);
    detail::put_u64(os, s.ny);
    detail::put_f64(os, s.h);
    detail::put_f64(os, s.origin.x);
    detail::put_f64(os, s.origin.y);
    for (double v : u.values()) detail::put_f64(os, v);
    if (!os) throw Error("failed to write UOL1 stream");
}

inline ScalarField read_field(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "UOL1", 4) != 0) throw Error("missing UOL1 magic bytes");
    GridSpec s;
    s.nx = detail::get_u64(is);
    s.ny = detail::get_u64(is);
    s.h = detail::get_f64(is);
    s.origin.x = detail::get_f64(is);
    s.origin.y = detail::get_f64(is);
    s.validate();
    if (s.nx > (1u << 20) || s.ny > (1u << 20)) throw Error("UOL1 grid dimensions are implausibly large");
    std::vector<double> v(s.size());
    for (double& x : v) x = detail::get_f64(is);
    return ScalarField(s, std::move(v));
}

inline void save_field(const std::string& path, const ScalarField& u) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    write_field(os, u);
}

inline ScalarField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    return read_field(is);
}

/// 8-bit binary PGM (P5), linear map min -> 0, max -> 255, top row = largest y.
/// A constant field maps to mid-gray.
inline void write_pgm(std::ostream& os, const ScalarField& u) {
    const GridSpec& s = u.spec();
    const double lo = u.min(), hi = u.max();
    os << "P5\n" << s.nx << ' ' << s.ny << "\n255\n";
    for (std::size_t jj = 0; jj < s.ny; ++jj) {
        const std::size_t j = s.ny - 1 - jj;
        for (std::size_t i = 0; i < s.nx; ++i) {
            unsigned char px = 128;
            if (hi > lo) px = static_cast<unsigned char>(std::lround(255.0 * (u(i, j) - lo) / (hi - lo)));
            os.put(static_cast<char>(px));
        }
    }
    if (!os) throw Error("failed to write PGM stream");
}

}  // namespace uol
