#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ngemm {

// Element domains used across the library. A is u8 (or i16), B is i8 (or
// i16), C/accumulators are i32.
enum class ElemKind : std::uint8_t {
    U8 = 0,
    I8 = 1,
    I16 = 2,
    I32 = 3,
};

constexpr int elem_bits(ElemKind k) {
    switch (k) {
    case ElemKind::U8:
    case ElemKind::I8:
        return 8;
    case ElemKind::I16:
        return 16;
    case ElemKind::I32:
        return 32;
    }
    return 0;
}

constexpr int elem_size(ElemKind k) { return elem_bits(k) / 8; }

constexpr bool elem_signed(ElemKind k) { return k != ElemKind::U8; }

constexpr std::int64_t elem_min(ElemKind k) {
    switch (k) {
    case ElemKind::U8:
        return 0;
    case ElemKind::I8:
        return -128;
    case ElemKind::I16:
        return -32768;
    case ElemKind::I32:
        return INT32_MIN;
    }
    return 0;
}

constexpr std::int64_t elem_max(ElemKind k) {
    switch (k) {
    case ElemKind::U8:
        return 255;
    case ElemKind::I8:
        return 127;
    case ElemKind::I16:
        return 32767;
    case ElemKind::I32:
        return INT32_MAX;
    }
    return 0;
}

inline const char* elem_name(ElemKind k) {
    switch (k) {
    case ElemKind::U8:
        return "u8";
    case ElemKind::I8:
        return "i8";
    case ElemKind::I16:
        return "i16";
    case ElemKind::I32:
        return "i32";
    }
    return "?";
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension / lane-count mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// Requested values outside an element kind's representable range.
struct RangeError : Error {
    using Error::Error;
};

// Out-of-range block coordinates.
struct IndexError : Error {
    using Error::Error;
};

// Malformed on-disk data; carries the byte offset of the first bad byte.
struct FormatError : Error {
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::uint64_t byte_offset;
};

// Invalid tile / search-space configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Nonzero data where the layout guarantees zero padding.
struct CorruptionError : Error {
    using Error::Error;
};

// Element kind has no kernel path (e.g. i32 operands).
struct UnsupportedError : Error {
    using Error::Error;
};

// Rank-deficient or otherwise unusable sample set for constant fitting.
struct FitError : Error {
    using Error::Error;
};

// A tuning trial produced output that disagrees with the reference kernel.
struct TuneError : Error {
    using Error::Error;
};

// i32 addition with well-defined wraparound. Integer GEMM accumulation is
// performed mod 2^32 throughout, which keeps sums independent of
// association order even when intermediate values overflow.
constexpr std::int32_t wrap_add_i32(std::int32_t a, std::int32_t b) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) +
                                     static_cast<std::uint32_t>(b));
}

constexpr std::int32_t wrap_i32(std::int64_t x) {
    return static_cast<std::int32_t>(static_cast<std::uint64_t>(x));
}

constexpr std::int16_t sat_i16(std::int32_t x) {
    if (x > 32767) return 32767;
    if (x < -32768) return -32768;
    return static_cast<std::int16_t>(x);
}

constexpr std::int64_t round_up(std::int64_t x, std::int64_t multiple) {
    return (x + multiple - 1) / multiple * multiple;
}

constexpr int log2_exact(std::int64_t x) {
    int n = 0;
    while ((std::int64_t{1} << n) < x) ++n;
    return n;
}

constexpr bool is_pow2(std::int64_t x) { return x > 0 && (x & (x - 1)) == 0; }

} // namespace ngemm
