#pragma once

// Little-endian binary helpers shared by the cache and checkpoint formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "cropfuse/util/errors.hpp"

namespace cropfuse::binio {

template <typename UInt>
void write_uint(std::ostream& out, UInt value) {
    char bytes[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
    }
    out.write(bytes, sizeof(UInt));
}

template <typename UInt>
UInt read_uint(std::istream& in) {
    unsigned char bytes[sizeof(UInt)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
        throw DataError("unexpected end of binary file");
    }
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        value |= static_cast<UInt>(bytes[i]) << (8 * i);
    }
    return value;
}

inline void write_i32(std::ostream& out, std::int32_t v) { write_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline std::int32_t read_i32(std::istream& in) { return std::bit_cast<std::int32_t>(read_uint<std::uint32_t>(in)); }
inline void write_f32(std::ostream& out, float v) { write_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline float read_f32(std::istream& in) { return std::bit_cast<float>(read_uint<std::uint32_t>(in)); }
inline void write_f64(std::ostream& out, double v) { write_uint(out, std::bit_cast<std::uint64_t>(v)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_uint<std::uint64_t>(in)); }

inline void write_string(std::ostream& out, std::string_view s) {
    write_uint<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const auto len = read_uint<std::uint16_t>(in);
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) throw DataError("unexpected end of binary file");
    return s;
}

inline void write_magic(std::ostream& out, std::string_view magic, std::uint16_t version) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    write_uint<std::uint16_t>(out, version);
}

/// Checks the 4-byte magic and returns the version field.
inline std::uint16_t read_magic(std::istream& in, std::string_view magic) {
    std::string got(magic.size(), '\0');
    if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
        throw DataError("bad magic, expected " + std::string(magic));
    }
    return read_uint<std::uint16_t>(in);
}

/// True when the stream has no bytes left.
inline bool at_eof(std::istream& in) {
    return in.peek() == std::char_traits<char>::eof();
}

}  // namespace cropfuse::binio
