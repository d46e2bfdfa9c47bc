#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#include "ngemm/common.hpp"
#include "ngemm/isa.hpp"
#include "ngemm/lanes.hpp"
#include "ngemm/layout.hpp"
#include "ngemm/matrix.hpp"
#include "ngemm/simd_native.hpp"

namespace ngemm {

namespace detail {

inline void require_gemm_operands(const MatrixBuf& a, const MatrixBuf& b) {
    bool u8i8 = a.kind() == ElemKind::U8 && b.kind() == ElemKind::I8;
    bool i16 = a.kind() == ElemKind::I16 && b.kind() == ElemKind::I16;
    if (!u8i8 && !i16)
        throw UnsupportedError(std::string("gemm: no kernel path for ") +
                               elem_name(a.kind()) + " x " + elem_name(b.kind()));
    if (a.cols() != b.cols())
        throw ShapeError("gemm: K mismatch, A is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " but B is " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                         " (B is stored [N x K])");
}

} // namespace detail

// Scalar reference: C[m][n] = sum_k a[m][k] * b[n][k], i32 accumulation
// wrapping mod 2^32. The oracle every kernel is checked against.
inline MatrixBuf gemm_ref(const MatrixBuf& a, const MatrixBuf& b) {
    detail::require_gemm_operands(a, b);
    const std::int64_t m = a.rows(), n = b.rows(), k = a.cols();
    MatrixBuf c(ElemKind::I32, m, n);
    if (a.kind() == ElemKind::U8) {
        for (std::int64_t mi = 0; mi < m; ++mi) {
            const std::uint8_t* arow = a.row<std::uint8_t>(mi);
            std::int32_t* crow = c.row<std::int32_t>(mi);
            for (std::int64_t ni = 0; ni < n; ++ni) {
                const std::int8_t* brow = b.row<std::int8_t>(ni);
                std::uint32_t acc = 0;
                for (std::int64_t ki = 0; ki < k; ++ki)
                    acc += static_cast<std::uint32_t>(
                        static_cast<std::int32_t>(arow[ki]) * brow[ki]);
                crow[ni] = static_cast<std::int32_t>(acc);
            }
        }
    } else {
        for (std::int64_t mi = 0; mi < m; ++mi) {
            const std::int16_t* arow = a.row<std::int16_t>(mi);
            std::int32_t* crow = c.row<std::int32_t>(mi);
            for (std::int64_t ni = 0; ni < n; ++ni) {
                const std::int16_t* brow = b.row<std::int16_t>(ni);
                std::uint32_t acc = 0;
                for (std::int64_t ki = 0; ki < k; ++ki)
                    acc += static_cast<std::uint32_t>(
                        static_cast<std::int32_t>(arow[ki]) * brow[ki]);
                crow[ni] = static_cast<std::int32_t>(acc);
            }
        }
    }
    return c;
}

inline MatrixBuf gemm_ref(const MatrixBuf& a, const MatrixBuf& b,
                          const GemmProblem& problem) {
    if (a.rows() != problem.m || b.rows() != problem.n || a.cols() != problem.k ||
        b.cols() != problem.k || a.kind() != problem.a_kind ||
        b.kind() != problem.b_kind)
        throw ShapeError("gemm_ref: operands do not match the stated problem");
    return gemm_ref(a, b);
}

// Scalar oracle for HardwareSaturating semantics: the same pairing the
// madd instructions use (adjacent K pairs aligned to even offsets), with the
// pairwise i16 sum saturated before the exact i32 stage. For the 16-bit path
// there is no saturation stage, so this coincides with gemm_ref.
inline MatrixBuf gemm_sat_oracle(const MatrixBuf& a, const MatrixBuf& b) {
    detail::require_gemm_operands(a, b);
    if (a.kind() == ElemKind::I16) return gemm_ref(a, b);
    const std::int64_t m = a.rows(), n = b.rows(), k = a.cols();
    MatrixBuf c(ElemKind::I32, m, n);
    for (std::int64_t mi = 0; mi < m; ++mi) {
        const std::uint8_t* arow = a.row<std::uint8_t>(mi);
        std::int32_t* crow = c.row<std::int32_t>(mi);
        for (std::int64_t ni = 0; ni < n; ++ni) {
            const std::int8_t* brow = b.row<std::int8_t>(ni);
            std::int32_t acc = 0;
            for (std::int64_t k0 = 0; k0 < k; k0 += 2) {
                std::uint8_t a1 = k0 + 1 < k ? arow[k0 + 1] : 0;
                std::int8_t b1 = k0 + 1 < k ? brow[k0 + 1] : 0;
                acc = wrap_add_i32(acc,
                                   detail::madd_pair_u8i8_sat(arow[k0], a1, brow[k0], b1));
            }
            crow[ni] = acc;
        }
    }
    return c;
}

namespace detail {

// --- emulated kernels ------------------------------------------------------
//
// These execute the exact phase structure the vector units perform, one lane
// at a time, and are the semantic ground truth the native paths must match.

inline void emu_conv_u8i8(const MatrixBuf& a, const MatrixBuf& b, MatrixBuf& c,
                          const KernelShape& s, SatMode mode) {
    const std::int64_t m = a.rows(), n = b.rows(), k = a.cols();
    const int w = s.w;
    std::vector<std::uint8_t> a_chunk(w);
    std::vector<std::int8_t> b_chunk(w);
    std::vector<std::int32_t> acc(static_cast<std::size_t>(w / 4));
    for (std::int64_t mi = 0; mi < m; ++mi) {
        const std::uint8_t* arow = a.row<std::uint8_t>(mi);
        for (std::int64_t ni = 0; ni < n; ++ni) {
            const std::int8_t* brow = b.row<std::int8_t>(ni);
            std::fill(acc.begin(), acc.end(), 0);
            for (std::int64_t k0 = 0; k0 < k; k0 += w) {
                const std::size_t take =
                    static_cast<std::size_t>(std::min<std::int64_t>(w, k - k0));
                // K tails are zero-padded in registers; the baseline has no
                // pack step to absorb them.
                std::fill(a_chunk.begin(), a_chunk.end(), 0);
                std::fill(b_chunk.begin(), b_chunk.end(), 0);
                std::memcpy(a_chunk.data(), arow + k0, take);
                std::memcpy(b_chunk.data(), brow + k0, take);
                for (int t = 0; t < w / 4; ++t) {
                    std::int32_t e;
                    if (mode == SatMode::HardwareSaturating) {
                        std::int16_t c0 = madd_pair_u8i8_sat(
                            a_chunk[4 * t], a_chunk[4 * t + 1], b_chunk[4 * t],
                            b_chunk[4 * t + 1]);
                        std::int16_t c1 = madd_pair_u8i8_sat(
                            a_chunk[4 * t + 2], a_chunk[4 * t + 3], b_chunk[4 * t + 2],
                            b_chunk[4 * t + 3]);
                        e = static_cast<std::int32_t>(c0) + c1;
                    } else {
                        e = wrap_add_i32(
                            madd_pair_u8i8_exact(a_chunk[4 * t], a_chunk[4 * t + 1],
                                                 b_chunk[4 * t], b_chunk[4 * t + 1]),
                            madd_pair_u8i8_exact(a_chunk[4 * t + 2], a_chunk[4 * t + 3],
                                                 b_chunk[4 * t + 2], b_chunk[4 * t + 3]));
                    }
                    acc[static_cast<std::size_t>(t)] =
                        wrap_add_i32(acc[static_cast<std::size_t>(t)], e);
                }
            }
            c.row<std::int32_t>(mi)[ni] = tree_reduce_i32(
                std::span<const std::int32_t>(acc)).value;
        }
    }
}

inline void emu_conv_i16(const MatrixBuf& a, const MatrixBuf& b, MatrixBuf& c,
                         const KernelShape& s) {
    const std::int64_t m = a.rows(), n = b.rows(), k = a.cols();
    const int w = s.w;
    std::vector<std::int16_t> a_chunk(w);
    std::vector<std::int16_t> b_chunk(w);
    std::vector<std::int32_t> acc(static_cast<std::size_t>(w / 2));
    for (std::int64_t mi = 0; mi < m; ++mi) {
        const std::int16_t* arow = a.row<std::int16_t>(mi);
        for (std::int64_t ni = 0; ni < n; ++ni) {
            const std::int16_t* brow = b.row<std::int16_t>(ni);
            std::fill(acc.begin(), acc.end(), 0);
            for (std::int64_t k0 = 0; k0 < k; k0 += w) {
                const std::size_t take =
                    static_cast<std::size_t>(std::min<std::int64_t>(w, k - k0));
                std::fill(a_chunk.begin(), a_chunk.end(), 0);
                std::fill(b_chunk.begin(), b_chunk.end(), 0);
                std::memcpy(a_chunk.data(), arow + k0, take * 2);
                std::memcpy(b_chunk.data(), brow + k0, take * 2);
                for (int t = 0; t < w / 2; ++t)
                    acc[static_cast<std::size_t>(t)] = wrap_add_i32(
                        acc[static_cast<std::size_t>(t)],
                        madd_pair_i16(a_chunk[2 * t], a_chunk[2 * t + 1],
                                      b_chunk[2 * t], b_chunk[2 * t + 1]));
            }
            c.row<std::int32_t>(mi)[ni] = tree_reduce_i32(
                std::span<const std::int32_t>(acc)).value;
        }
    }
}

inline void emu_ngemm_u8i8(const PackedWeight& p, const MatrixBuf& b, MatrixBuf& c,
                           SatMode mode) {
    const TileConfig& t = p.tile();
    const KernelShape& s = p.shape();
    const std::int64_t n = b.rows();
    const std::int64_t k_orig = p.k_orig();
    const std::uint8_t* pd = p.data<std::uint8_t>();
    std::int32_t* cd = c.row<std::int32_t>(0);
    std::vector<std::int32_t> acc(static_cast<std::size_t>(s.v));
    std::int8_t bgroup[4];
    for (const TileOrigin& o : tile_origins(t, p.m_pad(), n, p.k_pad())) {
        const std::int64_t m_hi = std::min(o.m0 + t.tm, p.m_orig());
        const std::int64_t n_hi = std::min(o.n0 + t.tn, n);
        const std::int64_t k_hi = std::min(o.k0 + t.tk, round_up(k_orig, s.h));
        for (std::int64_t mb = o.m0; mb < m_hi; mb += s.v) {
            const std::uint8_t* ablk0 = pd + p.block_offset(mb / s.v, o.k0 / s.h);
            const std::int64_t rows = std::min<std::int64_t>(s.v, p.m_orig() - mb);
            for (std::int64_t ni = o.n0; ni < n_hi; ++ni) {
                const std::int8_t* brow = b.row<std::int8_t>(ni);
                std::fill(acc.begin(), acc.end(), 0);
                const std::uint8_t* ablk = ablk0;
                for (std::int64_t kk = o.k0; kk < k_hi; kk += s.h, ablk += s.w) {
                    std::memset(bgroup, 0, sizeof bgroup);
                    std::memcpy(bgroup, brow + kk,
                                static_cast<std::size_t>(
                                    std::min<std::int64_t>(s.h, k_orig - kk)));
                    for (int r = 0; r < s.v; ++r) {
                        const std::uint8_t* ar = ablk + 4 * r;
                        std::int32_t e;
                        if (mode == SatMode::HardwareSaturating) {
                            std::int16_t c0 = madd_pair_u8i8_sat(ar[0], ar[1],
                                                                 bgroup[0], bgroup[1]);
                            std::int16_t c1 = madd_pair_u8i8_sat(ar[2], ar[3],
                                                                 bgroup[2], bgroup[3]);
                            e = static_cast<std::int32_t>(c0) + c1;
                        } else {
                            e = wrap_add_i32(
                                madd_pair_u8i8_exact(ar[0], ar[1], bgroup[0], bgroup[1]),
                                madd_pair_u8i8_exact(ar[2], ar[3], bgroup[2], bgroup[3]));
                        }
                        acc[static_cast<std::size_t>(r)] =
                            wrap_add_i32(acc[static_cast<std::size_t>(r)], e);
                    }
                }
                std::int32_t* ccol = cd + mb * n + ni;
                for (std::int64_t r = 0; r < rows; ++r)
                    ccol[r * n] = wrap_add_i32(ccol[r * n],
                                               acc[static_cast<std::size_t>(r)]);
            }
        }
    }
}

inline void emu_ngemm_i16(const PackedWeight& p, const MatrixBuf& b, MatrixBuf& c) {
    const TileConfig& t = p.tile();
    const KernelShape& s = p.shape();
    const std::int64_t n = b.rows();
    const std::int64_t k_orig = p.k_orig();
    const std::int16_t* pd = p.data<std::int16_t>();
    std::int32_t* cd = c.row<std::int32_t>(0);
    std::vector<std::int32_t> acc(static_cast<std::size_t>(s.v));
    std::int16_t bgroup[2];
    for (const TileOrigin& o : tile_origins(t, p.m_pad(), n, p.k_pad())) {
        const std::int64_t m_hi = std::min(o.m0 + t.tm, p.m_orig());
        const std::int64_t n_hi = std::min(o.n0 + t.tn, n);
        const std::int64_t k_hi = std::min(o.k0 + t.tk, round_up(k_orig, s.h));
        for (std::int64_t mb = o.m0; mb < m_hi; mb += s.v) {
            const std::int16_t* ablk0 = pd + p.block_offset(mb / s.v, o.k0 / s.h);
            const std::int64_t rows = std::min<std::int64_t>(s.v, p.m_orig() - mb);
            for (std::int64_t ni = o.n0; ni < n_hi; ++ni) {
                const std::int16_t* brow = b.row<std::int16_t>(ni);
                std::fill(acc.begin(), acc.end(), 0);
                const std::int16_t* ablk = ablk0;
                for (std::int64_t kk = o.k0; kk < k_hi; kk += s.h, ablk += s.w) {
                    bgroup[0] = brow[kk];
                    bgroup[1] = kk + 1 < k_orig ? brow[kk + 1] : std::int16_t{0};
                    for (int r = 0; r < s.v; ++r)
                        acc[static_cast<std::size_t>(r)] = wrap_add_i32(
                            acc[static_cast<std::size_t>(r)],
                            madd_pair_i16(ablk[2 * r], ablk[2 * r + 1], bgroup[0],
                                          bgroup[1]));
                }
                std::int32_t* ccol = cd + mb * n + ni;
                for (std::int64_t r = 0; r < rows; ++r)
                    ccol[r * n] = wrap_add_i32(ccol[r * n],
                                               acc[static_cast<std::size_t>(r)]);
            }
        }
    }
}

inline Isa isa_from_vector_bits(int bits) {
    switch (bits) {
    case 256:
        return Isa::V256;
    case 512:
        return Isa::V512;
    default:
        return Isa::SCALAR;
    }
}

// The native kernels implement HardwareSaturating u8i8 and the (saturation-
// free) i16 path. WideningExact u8i8 always runs through the emulation.
inline bool native_can_run(ElemKind a_kind, const KernelShape& s, SatMode mode) {
    if (a_kind == ElemKind::U8 && mode == SatMode::WideningExact) return false;
#if NGEMM_X86_NATIVE
    return host_supports_native(isa_from_vector_bits(s.w * elem_bits(a_kind)));
#else
    (void)s;
    return false;
#endif
}

inline bool resolve_native(ElemKind a_kind, const KernelShape& s, SatMode mode,
                           Engine engine) {
    switch (engine) {
    case Engine::Emulated:
        return false;
    case Engine::Native:
        if (!native_can_run(a_kind, s, mode))
            throw UnsupportedError(
                "no native path for this shape/mode on this host");
        return true;
    case Engine::Auto:
        return native_can_run(a_kind, s, mode);
    }
    return false;
}

} // namespace detail

// Conventional (tree-reduction) kernel over unpacked row-major A. In
// WideningExact mode the result equals gemm_ref bit-exactly for all inputs;
// in HardwareSaturating mode it equals gemm_sat_oracle.
inline MatrixBuf gemm_conventional(const MatrixBuf& a, const MatrixBuf& b,
                                   const KernelShape& shape, SatMode mode,
                                   Engine engine = Engine::Auto) {
    detail::require_gemm_operands(a, b);
    if (shape.v * shape.h != shape.w ||
        shape.h != (elem_bits(a.kind()) == 8 ? 4 : 2))
        throw ShapeError("gemm_conventional: kernel shape does not match operand kind");
    MatrixBuf c(ElemKind::I32, a.rows(), b.rows());
    const bool use_native = detail::resolve_native(a.kind(), shape, mode, engine);
    if (a.kind() == ElemKind::U8) {
#if NGEMM_X86_NATIVE
        if (use_native) {
            if (shape.w == 32)
                native::avx2_conv_u8i8_sat(a.row<std::uint8_t>(0), b.row<std::int8_t>(0),
                                           c.row<std::int32_t>(0), a.rows(), b.rows(),
                                           a.cols());
            else
                native::avx512_conv_u8i8_sat(a.row<std::uint8_t>(0),
                                             b.row<std::int8_t>(0),
                                             c.row<std::int32_t>(0), a.rows(), b.rows(),
                                             a.cols());
            return c;
        }
#endif
        detail::emu_conv_u8i8(a, b, c, shape, mode);
    } else {
#if NGEMM_X86_NATIVE
        if (use_native) {
            if (shape.w == 16)
                native::avx2_conv_i16(a.row<std::int16_t>(0), b.row<std::int16_t>(0),
                                      c.row<std::int32_t>(0), a.rows(), b.rows(),
                                      a.cols());
            else
                native::avx512_conv_i16(a.row<std::int16_t>(0), b.row<std::int16_t>(0),
                                        c.row<std::int32_t>(0), a.rows(), b.rows(),
                                        a.cols());
            return c;
        }
#endif
        detail::emu_conv_i16(a, b, c, shape);
    }
    return c;
}

// NGEMM (broadcast) kernel over a prepacked weight matrix. Equals
// gemm_conventional in the same SatMode; equals gemm_ref in WideningExact.
inline MatrixBuf gemm_ngemm(const PackedWeight& p, const MatrixBuf& b, SatMode mode,
                            Engine engine = Engine::Auto) {
    bool u8i8 = p.kind() == ElemKind::U8 && b.kind() == ElemKind::I8;
    bool i16 = p.kind() == ElemKind::I16 && b.kind() == ElemKind::I16;
    if (!u8i8 && !i16)
        throw UnsupportedError(std::string("gemm_ngemm: no kernel path for ") +
                               elem_name(p.kind()) + " x " + elem_name(b.kind()));
    if (b.cols() != p.k_orig())
        throw ShapeError("gemm_ngemm: packed K=" + std::to_string(p.k_orig()) +
                         " but B has K=" + std::to_string(b.cols()));
    MatrixBuf c(ElemKind::I32, p.m_orig(), b.rows());
    const bool use_native = detail::resolve_native(p.kind(), p.shape(), mode, engine);
    if (u8i8) {
#if NGEMM_X86_NATIVE
        if (use_native) {
            if (p.shape().w == 32)
                native::avx2_ngemm_u8i8_sat(p, b, c);
            else
                native::avx512_ngemm_u8i8_sat(p, b, c);
            return c;
        }
#endif
        detail::emu_ngemm_u8i8(p, b, c, mode);
    } else {
#if NGEMM_X86_NATIVE
        if (use_native) {
            if (p.shape().w == 16)
                native::avx2_ngemm_i16(p, b, c);
            else
                native::avx512_ngemm_i16(p, b, c);
            return c;
        }
#endif
        detail::emu_ngemm_i16(p, b, c);
    }
    return c;
}

} // namespace ngemm
