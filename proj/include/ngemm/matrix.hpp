#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ngemm/common.hpp"
#include "ngemm/prng.hpp"

namespace ngemm {

// Dense 2-D integer matrix, row-major, immutable by convention once built.
// The weight matrix A is [M x K]; the input matrix B is stored [N x K] so
// that the K reduction is unit-stride for both operands; C is [M x N] i32.
class MatrixBuf {
public:
    MatrixBuf(ElemKind kind, std::int64_t rows, std::int64_t cols)
        : kind_(kind), rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows * cols) * elem_size(kind), 0) {
        if (rows < 1 || cols < 1)
            throw ShapeError("MatrixBuf: dims must be >= 1, got " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }

    ElemKind kind() const { return kind_; }
    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    std::int64_t elems() const { return rows_ * cols_; }

    const std::uint8_t* bytes() const { return data_.data(); }
    std::uint8_t* bytes() { return data_.data(); }
    std::size_t byte_size() const { return data_.size(); }

    template <typename T>
    const T* row(std::int64_t r) const {
        return reinterpret_cast<const T*>(data_.data()) + r * cols_;
    }
    template <typename T>
    T* row(std::int64_t r) {
        return reinterpret_cast<T*>(data_.data()) + r * cols_;
    }

    // Kind-checked scalar access widened to i64; used by oracles and tests
    // where per-element cost does not matter.
    std::int64_t get(std::int64_t r, std::int64_t c) const {
        switch (kind_) {
        case ElemKind::U8:
            return row<std::uint8_t>(r)[c];
        case ElemKind::I8:
            return row<std::int8_t>(r)[c];
        case ElemKind::I16:
            return row<std::int16_t>(r)[c];
        case ElemKind::I32:
            return row<std::int32_t>(r)[c];
        }
        return 0;
    }

    void set(std::int64_t r, std::int64_t c, std::int64_t v) {
        switch (kind_) {
        case ElemKind::U8:
            row<std::uint8_t>(r)[c] = static_cast<std::uint8_t>(v);
            break;
        case ElemKind::I8:
            row<std::int8_t>(r)[c] = static_cast<std::int8_t>(v);
            break;
        case ElemKind::I16:
            row<std::int16_t>(r)[c] = static_cast<std::int16_t>(v);
            break;
        case ElemKind::I32:
            row<std::int32_t>(r)[c] = static_cast<std::int32_t>(v);
            break;
        }
    }

    bool operator==(const MatrixBuf& o) const {
        return kind_ == o.kind_ && rows_ == o.rows_ && cols_ == o.cols_ &&
               data_ == o.data_;
    }

    // Sum of all entries widened to i64; the cross-variant checksum used by
    // the bench harness.
    std::int64_t checksum() const {
        std::int64_t s = 0;
        for (std::int64_t r = 0; r < rows_; ++r)
            for (std::int64_t c = 0; c < cols_; ++c) s += get(r, c);
        return s;
    }

private:
    ElemKind kind_;
    std::int64_t rows_;
    std::int64_t cols_;
    std::vector<std::uint8_t> data_;
};

// The (M, N, K) problem plus operand kinds. Only the two paths the kernels
// implement are valid: u8 x i8 and i16 x i16.
struct GemmProblem {
    std::int64_t m = 0;
    std::int64_t n = 0;
    std::int64_t k = 0;
    ElemKind a_kind = ElemKind::U8;
    ElemKind b_kind = ElemKind::I8;

    GemmProblem() = default;
    GemmProblem(std::int64_t m_, std::int64_t n_, std::int64_t k_,
                ElemKind a, ElemKind b)
        : m(m_), n(n_), k(k_), a_kind(a), b_kind(b) {
        if (m < 1 || n < 1 || k < 1)
            throw ShapeError("GemmProblem: dims must be >= 1");
        bool u8i8 = a_kind == ElemKind::U8 && b_kind == ElemKind::I8;
        bool i16 = a_kind == ElemKind::I16 && b_kind == ElemKind::I16;
        if (!u8i8 && !i16)
            throw UnsupportedError(
                std::string("GemmProblem: no kernel path for ") +
                elem_name(a_kind) + " x " + elem_name(b_kind));
    }

    static GemmProblem u8i8(std::int64_t m, std::int64_t n, std::int64_t k) {
        return {m, n, k, ElemKind::U8, ElemKind::I8};
    }
    static GemmProblem i16(std::int64_t m, std::int64_t n, std::int64_t k) {
        return {m, n, k, ElemKind::I16, ElemKind::I16};
    }
};

// Deterministic random matrix: a pure function of (kind, dims, seed, range).
inline MatrixBuf mat_random(ElemKind kind, std::int64_t rows, std::int64_t cols,
                            std::uint64_t seed, std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw RangeError("mat_random: lo > hi");
    if (lo < elem_min(kind) || hi > elem_max(kind))
        throw RangeError("mat_random: [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "] outside " + elem_name(kind) +
                         " domain");
    MatrixBuf m(kind, rows, cols);
    XorShift64Star rng(seed);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c) m.set(r, c, rng.next_in(lo, hi));
    return m;
}

// --- binary matrix file format -------------------------------------------
//
// Fixed little-endian header followed by the raw row-major payload:
//
//   offset  size  field
//        0     4  magic "NGMM"
//        4     4  version, u32 = 1
//        8     1  element kind tag (0=u8 1=i8 2=i16 3=i32)
//        9     8  rows, u64
//       17     8  cols, u64
//       25     -  payload, rows*cols elements
//
// Plain matrix files contain exactly header + payload; trailing bytes are
// rejected so that packed-weight files (which append a trailer) cannot be
// misread as plain matrices.

namespace detail {

constexpr char kMatMagic[4] = {'N', 'G', 'M', 'M'};
constexpr std::uint32_t kMatVersion = 1;
constexpr std::size_t kMatHeaderSize = 25;

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline std::string mat_header_bytes(const MatrixBuf& m) {
    std::string h;
    h.append(kMatMagic, 4);
    put_u32(h, kMatVersion);
    h.push_back(static_cast<char>(m.kind()));
    put_u64(h, static_cast<std::uint64_t>(m.rows()));
    put_u64(h, static_cast<std::uint64_t>(m.cols()));
    return h;
}

inline std::vector<std::uint8_t> read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
    return buf;
}

// Parses a matrix header + payload from buf. `want_exact_size` enforces that
// nothing follows the payload. Returns the payload end offset.
inline std::size_t parse_matrix(const std::vector<std::uint8_t>& buf,
                                bool want_exact_size, MatrixBuf* out) {
    if (buf.size() < kMatHeaderSize)
        throw FormatError("truncated header", buf.size());
    if (std::memcmp(buf.data(), kMatMagic, 4) != 0)
        throw FormatError("bad magic (expected \"NGMM\")", 0);
    std::uint32_t version = get_u32(buf.data() + 4);
    if (version != kMatVersion)
        throw FormatError("unsupported version " + std::to_string(version), 4);
    std::uint8_t tag = buf[8];
    if (tag > 3) throw FormatError("unknown element kind tag " + std::to_string(tag), 8);
    ElemKind kind = static_cast<ElemKind>(tag);
    std::uint64_t rows = get_u64(buf.data() + 9);
    std::uint64_t cols = get_u64(buf.data() + 17);
    if (rows < 1 || cols < 1) throw FormatError("zero dimension", 9);
    std::uint64_t payload = rows * cols * static_cast<std::uint64_t>(elem_size(kind));
    if (buf.size() < kMatHeaderSize + payload)
        throw FormatError("truncated payload", buf.size());
    if (want_exact_size && buf.size() != kMatHeaderSize + payload)
        throw FormatError("trailing bytes after payload", kMatHeaderSize + payload);
    MatrixBuf m(kind, static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols));
    std::memcpy(m.bytes(), buf.data() + kMatHeaderSize, payload);
    *out = std::move(m);
    return kMatHeaderSize + static_cast<std::size_t>(payload);
}

} // namespace detail

inline void mat_write(const MatrixBuf& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    std::string header = detail::mat_header_bytes(m);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(reinterpret_cast<const char*>(m.bytes()),
            static_cast<std::streamsize>(m.byte_size()));
    if (!f) throw Error("write failed: " + path);
}

inline MatrixBuf mat_read(const std::string& path) {
    std::vector<std::uint8_t> buf = detail::read_all(path);
    MatrixBuf m(ElemKind::U8, 1, 1);
    detail::parse_matrix(buf, /*want_exact_size=*/true, &m);
    return m;
}

} // namespace ngemm
