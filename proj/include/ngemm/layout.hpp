#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ngemm/common.hpp"
#include "ngemm/isa.hpp"
#include "ngemm/matrix.hpp"

namespace ngemm {

// Vectorization parameters for one (isa, element-kind) pair:
//   w = lanes per vector        = vector_bits / element_bits
//   h = elements along K folded into one 32-bit accumulator lane
//       (4 for 8-bit operands, 2 for 16-bit operands)
//   v = rows along M covered by one vector block = w / h
struct KernelShape {
    int w = 0;
    int h = 0;
    int v = 0;

    bool operator==(const KernelShape&) const = default;
};

inline KernelShape kernel_shape(IsaProfile isa, ElemKind kind) {
    int bits = elem_bits(kind);
    if (bits != 8 && bits != 16)
        throw UnsupportedError(std::string("kernel_shape: no kernel path for ") +
                               elem_name(kind));
    KernelShape s;
    s.w = isa.vector_bits / bits;
    s.h = (bits == 8) ? 4 : 2;
    s.v = s.w / s.h;
    return s;
}

// Flat position of element (m_in_block, k_in_block) inside one v-by-h inner
// block: h elements along K, then the next row along M, v times. This is the
// zigzag (Morton-style) order of the inner layout.
inline int inner_offset(int m_in_block, int k_in_block, const KernelShape& shape) {
    if (m_in_block < 0 || m_in_block >= shape.v)
        throw IndexError("inner_offset: m_in_block " + std::to_string(m_in_block) +
                         " outside [0, " + std::to_string(shape.v) + ")");
    if (k_in_block < 0 || k_in_block >= shape.h)
        throw IndexError("inner_offset: k_in_block " + std::to_string(k_in_block) +
                         " outside [0, " + std::to_string(shape.h) + ")");
    return m_in_block * shape.h + k_in_block;
}

enum class Perm : std::uint8_t { MNK = 0, MKN = 1, NMK = 2, NKM = 3, KMN = 4, KNM = 5 };

inline const char* perm_name(Perm p) {
    switch (p) {
    case Perm::MNK: return "mnk";
    case Perm::MKN: return "mkn";
    case Perm::NMK: return "nmk";
    case Perm::NKM: return "nkm";
    case Perm::KMN: return "kmn";
    case Perm::KNM: return "knm";
    }
    return "?";
}

inline Perm perm_from_name(const std::string& s) {
    for (Perm p : {Perm::MNK, Perm::MKN, Perm::NMK, Perm::NKM, Perm::KMN, Perm::KNM})
        if (s == perm_name(p)) return p;
    throw ConfigError("unknown permutation \"" + s + "\"");
}

// True when M precedes K in the loop-nest order (outermost first). The
// M-before-K orders make the M tile index the outer traversal key of the
// packed layout, i.e. K tiles of one M strip are contiguous.
inline bool m_before_k(Perm p) {
    return p == Perm::MNK || p == Perm::MKN || p == Perm::NMK;
}

// Loop-tiling choice. tm and tk must be whole multiples of the kernel
// shape's v and h (tm = beta*v, tk = alpha*h); tn is unconstrained by the
// layout since the input matrix B is never packed.
struct TileConfig {
    std::int64_t tm = 0;
    std::int64_t tn = 0;
    std::int64_t tk = 0;
    Perm permutation = Perm::MNK;

    bool operator==(const TileConfig&) const = default;

    void validate(const KernelShape& shape) const {
        if (tm < shape.v || tm % shape.v != 0)
            throw ConfigError("tile: tm=" + std::to_string(tm) +
                              " is not a positive multiple of v=" +
                              std::to_string(shape.v));
        if (tk < shape.h || tk % shape.h != 0)
            throw ConfigError("tile: tk=" + std::to_string(tk) +
                              " is not a positive multiple of h=" +
                              std::to_string(shape.h));
        if (tn < 1) throw ConfigError("tile: tn must be >= 1");
    }

    std::string to_string() const {
        return "tm=" + std::to_string(tm) + ",tn=" + std::to_string(tn) +
               ",tk=" + std::to_string(tk) + ",perm=" + perm_name(permutation);
    }
};

// Marshalled weight matrix. Two-level layout:
//
//   outer: tk-by-tm tiles, traversed per the M/K order of the permutation
//          (outermost label first); inside a tile the v-by-h inner blocks go
//          K first, then down M;
//   inner: each block stores its v x h elements in inner_offset order, so a
//          block is exactly one contiguous w-element vector load.
//
// Rows are padded to a multiple of tm and columns to a multiple of tk with
// zeros, so kernels never see an M or K tail.
class PackedWeight {
public:
    PackedWeight(ElemKind kind, KernelShape shape, TileConfig tile,
                 std::int64_t m_orig, std::int64_t k_orig)
        : kind_(kind), shape_(shape), tile_(tile), m_orig_(m_orig), k_orig_(k_orig),
          m_pad_(round_up(m_orig, tile.tm)), k_pad_(round_up(k_orig, tile.tk)),
          data_(static_cast<std::size_t>(m_pad_ * k_pad_) * elem_size(kind), 0) {}

    ElemKind kind() const { return kind_; }
    const KernelShape& shape() const { return shape_; }
    const TileConfig& tile() const { return tile_; }
    std::int64_t m_orig() const { return m_orig_; }
    std::int64_t k_orig() const { return k_orig_; }
    std::int64_t m_pad() const { return m_pad_; }
    std::int64_t k_pad() const { return k_pad_; }

    const std::uint8_t* bytes() const { return data_.data(); }
    std::uint8_t* bytes() { return data_.data(); }
    std::size_t byte_size() const { return data_.size(); }

    template <typename T>
    const T* data() const {
        return reinterpret_cast<const T*>(data_.data());
    }
    template <typename T>
    T* data() {
        return reinterpret_cast<T*>(data_.data());
    }

    // Element offset of inner block (m_blk, k_blk), counted in v-row /
    // h-column units over the padded matrix. Single source of truth for
    // pack, unpack and the ngemm kernels.
    std::int64_t block_offset(std::int64_t m_blk, std::int64_t k_blk) const {
        std::int64_t tile_m = m_blk * shape_.v / tile_.tm;
        std::int64_t tile_k = k_blk * shape_.h / tile_.tk;
        std::int64_t bm = m_blk - tile_m * (tile_.tm / shape_.v);
        std::int64_t bk = k_blk - tile_k * (tile_.tk / shape_.h);
        std::int64_t tiles_m = m_pad_ / tile_.tm;
        std::int64_t tiles_k = k_pad_ / tile_.tk;
        std::int64_t tile_lin = m_before_k(tile_.permutation)
                                    ? tile_m * tiles_k + tile_k
                                    : tile_k * tiles_m + tile_m;
        std::int64_t blocks_per_tile = (tile_.tm / shape_.v) * (tile_.tk / shape_.h);
        std::int64_t blk_lin = bm * (tile_.tk / shape_.h) + bk;
        return (tile_lin * blocks_per_tile + blk_lin) * shape_.w;
    }

    std::int64_t elem_offset(std::int64_t gm, std::int64_t gk) const {
        std::int64_t blk = block_offset(gm / shape_.v, gk / shape_.h);
        return blk + inner_offset(static_cast<int>(gm % shape_.v),
                                  static_cast<int>(gk % shape_.h), shape_);
    }

private:
    ElemKind kind_;
    KernelShape shape_;
    TileConfig tile_;
    std::int64_t m_orig_;
    std::int64_t k_orig_;
    std::int64_t m_pad_;
    std::int64_t k_pad_;
    std::vector<std::uint8_t> data_;
};

// Tile origins (m0, n0, k0) in the loop-nest order given by the permutation,
// outermost label first. Shared by the emulated and native ngemm kernels so
// both walk tiles identically.
struct TileOrigin {
    std::int64_t m0, n0, k0;
};

inline std::vector<TileOrigin> tile_origins(const TileConfig& t, std::int64_t m_pad,
                                            std::int64_t n, std::int64_t k_pad) {
    const std::int64_t tiles_m = m_pad / t.tm;
    const std::int64_t tiles_n = (n + t.tn - 1) / t.tn;
    const std::int64_t tiles_k = k_pad / t.tk;
    std::int64_t counts[3];
    int axes[3]; // 0=M 1=N 2=K
    const char* order = perm_name(t.permutation);
    for (int i = 0; i < 3; ++i) {
        switch (order[i]) {
        case 'm': axes[i] = 0; counts[i] = tiles_m; break;
        case 'n': axes[i] = 1; counts[i] = tiles_n; break;
        default: axes[i] = 2; counts[i] = tiles_k; break;
        }
    }
    std::vector<TileOrigin> out;
    out.reserve(static_cast<std::size_t>(tiles_m * tiles_n * tiles_k));
    std::int64_t idx[3];
    for (idx[0] = 0; idx[0] < counts[0]; ++idx[0])
        for (idx[1] = 0; idx[1] < counts[1]; ++idx[1])
            for (idx[2] = 0; idx[2] < counts[2]; ++idx[2]) {
                std::int64_t ti[3] = {0, 0, 0};
                for (int i = 0; i < 3; ++i) ti[axes[i]] = idx[i];
                out.push_back({ti[0] * t.tm, ti[1] * t.tn, ti[2] * t.tk});
            }
    return out;
}

namespace detail {

template <typename T>
void pack_weights_typed(const MatrixBuf& a, PackedWeight& p) {
    T* dst = p.data<T>();
    for (std::int64_t gm = 0; gm < p.m_orig(); ++gm) {
        const T* src = a.row<T>(gm);
        for (std::int64_t gk = 0; gk < p.k_orig(); ++gk)
            dst[p.elem_offset(gm, gk)] = src[gk];
    }
}

template <typename T>
MatrixBuf unpack_weights_typed(const PackedWeight& p) {
    MatrixBuf a(p.kind(), p.m_orig(), p.k_orig());
    const T* src = p.data<T>();
    for (std::int64_t gm = 0; gm < p.m_pad(); ++gm) {
        for (std::int64_t gk = 0; gk < p.k_pad(); ++gk) {
            T value = src[p.elem_offset(gm, gk)];
            if (gm < p.m_orig() && gk < p.k_orig()) {
                a.row<T>(gm)[gk] = value;
            } else if (value != 0) {
                throw CorruptionError(
                    "nonzero value at padded coordinate (" + std::to_string(gm) +
                    ", " + std::to_string(gk) + ")");
            }
        }
    }
    return a;
}

} // namespace detail

inline PackedWeight pack_weights(const MatrixBuf& a, const KernelShape& shape,
                                 const TileConfig& tile) {
    int bits = elem_bits(a.kind());
    if (bits != 8 && bits != 16)
        throw UnsupportedError(std::string("pack_weights: no kernel path for ") +
                               elem_name(a.kind()));
    if (shape.v * shape.h != shape.w || shape.h != (bits == 8 ? 4 : 2))
        throw ConfigError(std::string("pack_weights: shape (w=") +
                          std::to_string(shape.w) + ",h=" + std::to_string(shape.h) +
                          ",v=" + std::to_string(shape.v) + ") does not match the " +
                          elem_name(a.kind()) + " path");
    tile.validate(shape);
    PackedWeight p(a.kind(), shape, tile, a.rows(), a.cols());
    if (elem_size(a.kind()) == 1)
        detail::pack_weights_typed<std::uint8_t>(a, p);
    else
        detail::pack_weights_typed<std::uint16_t>(a, p);
    return p;
}

inline MatrixBuf unpack_weights(const PackedWeight& p) {
    if (elem_size(p.kind()) == 1)
        return detail::unpack_weights_typed<std::uint8_t>(p);
    return detail::unpack_weights_typed<std::uint16_t>(p);
}

// --- packed-weight file format --------------------------------------------
//
// A matrix-core header/payload for the padded m_pad x k_pad buffer, followed
// by a fixed little-endian trailer:
//
//   offset  size  field
//        0     4  magic "NGPT"
//        4     4  w, u32
//        8     4  h, u32
//       12     4  v, u32
//       16     8  tm, u64
//       24     8  tn, u64
//       32     8  tk, u64
//       40     1  permutation tag (0=mnk 1=mkn 2=nmk 3=nkm 4=kmn 5=knm)
//       41     8  m_orig, u64
//       49     8  k_orig, u64

namespace detail {

constexpr char kPackTrailerMagic[4] = {'N', 'G', 'P', 'T'};
constexpr std::size_t kPackTrailerSize = 57;

} // namespace detail

inline void packed_write(const PackedWeight& p, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    MatrixBuf padded(p.kind(), p.m_pad(), p.k_pad());
    std::memcpy(padded.bytes(), p.bytes(), p.byte_size());
    std::string header = detail::mat_header_bytes(padded);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(reinterpret_cast<const char*>(p.bytes()),
            static_cast<std::streamsize>(p.byte_size()));
    std::string t;
    t.append(detail::kPackTrailerMagic, 4);
    detail::put_u32(t, static_cast<std::uint32_t>(p.shape().w));
    detail::put_u32(t, static_cast<std::uint32_t>(p.shape().h));
    detail::put_u32(t, static_cast<std::uint32_t>(p.shape().v));
    detail::put_u64(t, static_cast<std::uint64_t>(p.tile().tm));
    detail::put_u64(t, static_cast<std::uint64_t>(p.tile().tn));
    detail::put_u64(t, static_cast<std::uint64_t>(p.tile().tk));
    t.push_back(static_cast<char>(p.tile().permutation));
    detail::put_u64(t, static_cast<std::uint64_t>(p.m_orig()));
    detail::put_u64(t, static_cast<std::uint64_t>(p.k_orig()));
    f.write(t.data(), static_cast<std::streamsize>(t.size()));
    if (!f) throw Error("write failed: " + path);
}

inline PackedWeight packed_read(const std::string& path) {
    std::vector<std::uint8_t> buf = detail::read_all(path);
    MatrixBuf padded(ElemKind::U8, 1, 1);
    std::size_t payload_end = detail::parse_matrix(buf, /*want_exact_size=*/false, &padded);
    if (buf.size() < payload_end + detail::kPackTrailerSize)
        throw FormatError("missing packed-weight trailer", buf.size());
    if (buf.size() != payload_end + detail::kPackTrailerSize)
        throw FormatError("trailing bytes after packed-weight trailer",
                          payload_end + detail::kPackTrailerSize);
    const std::uint8_t* t = buf.data() + payload_end;
    if (std::memcmp(t, detail::kPackTrailerMagic, 4) != 0)
        throw FormatError("bad packed-weight trailer magic", payload_end);
    KernelShape shape;
    shape.w = static_cast<int>(detail::get_u32(t + 4));
    shape.h = static_cast<int>(detail::get_u32(t + 8));
    shape.v = static_cast<int>(detail::get_u32(t + 12));
    if (shape.h == 0 || shape.v == 0 || shape.v * shape.h != shape.w)
        throw FormatError("inconsistent kernel shape in trailer", payload_end + 4);
    TileConfig tile;
    tile.tm = static_cast<std::int64_t>(detail::get_u64(t + 16));
    tile.tn = static_cast<std::int64_t>(detail::get_u64(t + 24));
    tile.tk = static_cast<std::int64_t>(detail::get_u64(t + 32));
    std::uint8_t perm_tag = t[40];
    if (perm_tag > 5)
        throw FormatError("unknown permutation tag " + std::to_string(perm_tag),
                          payload_end + 40);
    tile.permutation = static_cast<Perm>(perm_tag);
    tile.validate(shape);
    std::int64_t m_orig = static_cast<std::int64_t>(detail::get_u64(t + 41));
    std::int64_t k_orig = static_cast<std::int64_t>(detail::get_u64(t + 49));
    if (m_orig < 1 || k_orig < 1)
        throw FormatError("zero original dimension in trailer", payload_end + 41);
    PackedWeight p(padded.kind(), shape, tile, m_orig, k_orig);
    if (p.m_pad() != padded.rows() || p.k_pad() != padded.cols())
        throw FormatError("padded dims disagree with tile metadata", 9);
    std::memcpy(p.bytes(), padded.bytes(), p.byte_size());
    return p;
}

} // namespace ngemm
