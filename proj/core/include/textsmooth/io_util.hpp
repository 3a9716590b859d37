#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "textsmooth/errors.hpp"

// Little-endian binary primitives shared by the checkpoint and cache formats.

namespace textsmooth::io {

inline void write_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    os.write(b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    os.write(b, 8);
}

inline void write_f64(std::ostream& os, double v) {
    write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint8_t read_u8(std::istream& is) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) {
        throw ParseError("unexpected end of file");
    }
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& is) {
    char b[4];
    if (!is.read(b, 4)) {
        throw ParseError("unexpected end of file");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    char b[8];
    if (!is.read(b, 8)) {
        throw ParseError("unexpected end of file");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
}

inline double read_f64(std::istream& is) {
    return std::bit_cast<double>(read_u64(is));
}

inline std::string read_string(std::istream& is, std::uint32_t max_len = 1u << 20) {
    const std::uint32_t n = read_u32(is);
    if (n > max_len) {
        throw ParseError("string length " + std::to_string(n) + " exceeds limit");
    }
    std::string s(n, '\0');
    if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
        throw ParseError("unexpected end of file");
    }
    return s;
}

// FNV-1a over raw bytes; used for parameter and dataset checksums.
class Fnv1a {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= static_cast<std::uint64_t>(p[i]);
            hash_ *= 1099511628211ULL;
        }
    }

    void add_u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) {
            b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        }
        add_bytes(b, 8);
    }

    void add_f64(double v) { add_u64(std::bit_cast<std::uint64_t>(v)); }

    void add_string(const std::string& s) {
        add_u64(s.size());
        add_bytes(s.data(), s.size());
    }

    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 14695981039346656037ULL;
};

} // namespace textsmooth::io
