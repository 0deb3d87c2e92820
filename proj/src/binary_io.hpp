#pragma once

// Little-endian primitive encoding shared by the tensor, model and dataset formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "fgsm/error.hpp"

namespace fgsm::detail {

inline void write_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> bytes{};
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out.write(bytes.data(), bytes.size());
}

inline void write_f32(std::ostream& out, float v) {
    write_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_magic(std::ostream& out, std::string_view magic) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n, std::string_view what) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw FormatError("truncated input while reading " + std::string(what));
}

inline std::uint8_t read_u8(std::istream& in, std::string_view what) {
    char c = 0;
    read_exact(in, &c, 1, what);
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& in, std::string_view what) {
    std::array<unsigned char, 4> bytes{};
    read_exact(in, reinterpret_cast<char*>(bytes.data()), bytes.size(), what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

inline float read_f32(std::istream& in, std::string_view what) {
    return std::bit_cast<float>(read_u32(in, what));
}

inline void expect_magic(std::istream& in, std::string_view magic) {
    std::string got(magic.size(), '\0');
    read_exact(in, got.data(), got.size(), "magic");
    if (got != magic)
        throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
}

} // namespace fgsm::detail
