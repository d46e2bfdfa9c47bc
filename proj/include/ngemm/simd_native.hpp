#pragma once

// Native AVX2 / AVX512BW implementations of the vector primitives and of the
// hardware-faithful (saturating) kernels. Everything here is compiled via
// per-function target attributes, so the library builds without -mavx* and
// callers gate execution on host_supports_native().
//
// Bit-exactness contract: every function must produce results identical to
// the lane-level emulation in lanes.hpp. Saturation happens only in the
// i16 maddubs stage; all i32 arithmetic wraps mod 2^32 and is therefore
// order-independent, which is what lets the shuffle-based reductions and
// the emulated halving loop agree bit-for-bit.

#include <cstdint>
#include <cstring>

#include "ngemm/common.hpp"
#include "ngemm/layout.hpp"
#include "ngemm/matrix.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define NGEMM_X86_NATIVE 1
#include <immintrin.h>
#else
#define NGEMM_X86_NATIVE 0
#endif

namespace ngemm {
namespace native {

#if NGEMM_X86_NATIVE

#define NGEMM_TARGET_AVX2 __attribute__((target("avx2")))
#define NGEMM_TARGET_AVX512 __attribute__((target("avx512f,avx512bw")))

// --- AVX2 primitives (w = 32 for 8-bit, 16 for 16-bit) --------------------

NGEMM_TARGET_AVX2 inline void avx2_maddubs(const std::uint8_t* a,
                                           const std::int8_t* b,
                                           std::int16_t* out) {
    __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a));
    __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b));
    __m256i c = _mm256_maddubs_epi16(va, vb);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out), c);
}

NGEMM_TARGET_AVX2 inline void avx2_madd_i16(const std::int16_t* a,
                                            const std::int16_t* b,
                                            std::int32_t* out) {
    __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a));
    __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b));
    __m256i e = _mm256_madd_epi16(va, vb);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out), e);
}

// Exact (widening) u8 x i8 pairwise multiply-add: zero/sign-extend to i16,
// then VPMADDWD, which is exact in i32. Lane order matches the emulation.
NGEMM_TARGET_AVX2 inline void avx2_madd_u8i8_exact(const std::uint8_t* a,
                                                   const std::int8_t* b,
                                                   std::int32_t* out) {
    __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a));
    __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b));
    __m256i a_lo = _mm256_cvtepu8_epi16(_mm256_castsi256_si128(va));
    __m256i a_hi = _mm256_cvtepu8_epi16(_mm256_extracti128_si256(va, 1));
    __m256i b_lo = _mm256_cvtepi8_epi16(_mm256_castsi256_si128(vb));
    __m256i b_hi = _mm256_cvtepi8_epi16(_mm256_extracti128_si256(vb, 1));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out),
                        _mm256_madd_epi16(a_lo, b_lo));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + 8),
                        _mm256_madd_epi16(a_hi, b_hi));
}

// Tree reduction of 8 i32 lanes in 3 halving steps (VPSHFD + VPADDD style).
NGEMM_TARGET_AVX2 inline std::int32_t avx2_reduce8(__m256i v) {
    __m128i lo = _mm256_castsi256_si128(v);
    __m128i hi = _mm256_extracti128_si256(v, 1);
    lo = _mm_add_epi32(lo, hi);
    lo = _mm_add_epi32(lo, _mm_shuffle_epi32(lo, 0x4E));
    lo = _mm_add_epi32(lo, _mm_shuffle_epi32(lo, 0xB1));
    return _mm_cvtsi128_si32(lo);
}

NGEMM_TARGET_AVX2 inline std::int32_t avx2_tree_reduce_i32(const std::int32_t* v) {
    return avx2_reduce8(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(v)));
}

// Broadcast of one 4-byte group (h=4 u8 elements, or h=2 i16 elements) to
// all 32-bit slots of a 256-bit vector.
NGEMM_TARGET_AVX2 inline void avx2_broadcast4(const void* block4, void* out32) {
    std::int32_t x;
    std::memcpy(&x, block4, 4);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out32), _mm256_set1_epi32(x));
}

// --- AVX512 primitives (w = 64 for 8-bit, 32 for 16-bit) ------------------

NGEMM_TARGET_AVX512 inline void avx512_maddubs(const std::uint8_t* a,
                                               const std::int8_t* b,
                                               std::int16_t* out) {
    __m512i va = _mm512_loadu_si512(a);
    __m512i vb = _mm512_loadu_si512(b);
    _mm512_storeu_si512(out, _mm512_maddubs_epi16(va, vb));
}

NGEMM_TARGET_AVX512 inline void avx512_madd_i16(const std::int16_t* a,
                                                const std::int16_t* b,
                                                std::int32_t* out) {
    __m512i va = _mm512_loadu_si512(a);
    __m512i vb = _mm512_loadu_si512(b);
    _mm512_storeu_si512(out, _mm512_madd_epi16(va, vb));
}

NGEMM_TARGET_AVX512 inline void avx512_madd_u8i8_exact(const std::uint8_t* a,
                                                       const std::int8_t* b,
                                                       std::int32_t* out) {
    __m512i va = _mm512_loadu_si512(a);
    __m512i vb = _mm512_loadu_si512(b);
    __m512i a_lo = _mm512_cvtepu8_epi16(_mm512_castsi512_si256(va));
    __m512i a_hi = _mm512_cvtepu8_epi16(_mm512_extracti64x4_epi64(va, 1));
    __m512i b_lo = _mm512_cvtepi8_epi16(_mm512_castsi512_si256(vb));
    __m512i b_hi = _mm512_cvtepi8_epi16(_mm512_extracti64x4_epi64(vb, 1));
    _mm512_storeu_si512(out, _mm512_madd_epi16(a_lo, b_lo));
    _mm512_storeu_si512(out + 16, _mm512_madd_epi16(a_hi, b_hi));
}

NGEMM_TARGET_AVX512 inline std::int32_t avx512_tree_reduce_i32(const std::int32_t* v) {
    return _mm512_reduce_add_epi32(_mm512_loadu_si512(v));
}

NGEMM_TARGET_AVX512 inline void avx512_broadcast4(const void* block4, void* out64) {
    std::int32_t x;
    std::memcpy(&x, block4, 4);
    _mm512_storeu_si512(out64, _mm512_set1_epi32(x));
}

// --- full kernels ----------------------------------------------------------
//
// The drivers below mirror the emulated kernels' phase structure exactly:
// conventional = per-(m,n) chunk loop + lane accumulate + tree reduction;
// ngemm = per (v-row block, n) broadcast + accumulate, lanes landing
// directly in a column of C. C is assumed zero-initialized; stores use
// wrapping adds so K-tile partial sums compose in any order.

NGEMM_TARGET_AVX2 inline void avx2_conv_u8i8_sat(const std::uint8_t* a,
                                                 const std::int8_t* b,
                                                 std::int32_t* c, std::int64_t m,
                                                 std::int64_t n, std::int64_t k) {
    const __m256i ones = _mm256_set1_epi16(1);
    const std::int64_t k_main = k / 32 * 32;
    alignas(32) std::uint8_t a_tail[32];
    alignas(32) std::int8_t b_tail[32];
    for (std::int64_t mi = 0; mi < m; ++mi) {
        const std::uint8_t* arow = a + mi * k;
        for (std::int64_t ni = 0; ni < n; ++ni) {
            const std::int8_t* brow = b + ni * k;
            __m256i acc = _mm256_setzero_si256();
            for (std::int64_t k0 = 0; k0 < k_main; k0 += 32) {
                __m256i va = _mm256_loadu_si256(
                    reinterpret_cast<const __m256i*>(arow + k0));
                __m256i vb = _mm256_loadu_si256(
                    reinterpret_cast<const __m256i*>(brow + k0));
                __m256i e = _mm256_madd_epi16(_mm256_maddubs_epi16(va, vb), ones);
                acc = _mm256_add_epi32(acc, e);
            }
            if (k_main < k) {
                std::memset(a_tail, 0, sizeof a_tail);
                std::memset(b_tail, 0, sizeof b_tail);
                std::memcpy(a_tail, arow + k_main, static_cast<std::size_t>(k - k_main));
                std::memcpy(b_tail, brow + k_main, static_cast<std::size_t>(k - k_main));
                __m256i va = _mm256_load_si256(reinterpret_cast<const __m256i*>(a_tail));
                __m256i vb = _mm256_load_si256(reinterpret_cast<const __m256i*>(b_tail));
                __m256i e = _mm256_madd_epi16(_mm256_maddubs_epi16(va, vb), ones);
                acc = _mm256_add_epi32(acc, e);
            }
            c[mi * n + ni] = avx2_reduce8(acc);
        }
    }
}

NGEMM_TARGET_AVX2 inline void avx2_conv_i16(const std::int16_t* a,
                                            const std::int16_t* b, std::int32_t* c,
                                            std::int64_t m, std::int64_t n,
                                            std::int64_t k) {
    const std::int64_t k_main = k / 16 * 16;
    alignas(32) std::int16_t a_tail[16];
    alignas(32) std::int16_t b_tail[16];
    for (std::int64_t mi = 0; mi < m; ++mi) {
        const std::int16_t* arow = a + mi * k;
        for (std::int64_t ni = 0; ni < n; ++ni) {
            const std::int16_t* brow = b + ni * k;
            __m256i acc = _mm256_setzero_si256();
            for (std::int64_t k0 = 0; k0 < k_main; k0 += 16) {
                __m256i va = _mm256_loadu_si256(
                    reinterpret_cast<const __m256i*>(arow + k0));
                __m256i vb = _mm256_loadu_si256(
                    reinterpret_cast<const __m256i*>(brow + k0));
                acc = _mm256_add_epi32(acc, _mm256_madd_epi16(va, vb));
            }
            if (k_main < k) {
                std::memset(a_tail, 0, sizeof a_tail);
                std::memset(b_tail, 0, sizeof b_tail);
                std::memcpy(a_tail, arow + k_main,
                            static_cast<std::size_t>(k - k_main) * 2);
                std::memcpy(b_tail, brow + k_main,
                            static_cast<std::size_t>(k - k_main) * 2);
                __m256i va = _mm256_load_si256(reinterpret_cast<const __m256i*>(a_tail));
                __m256i vb = _mm256_load_si256(reinterpret_cast<const __m256i*>(b_tail));
                acc = _mm256_add_epi32(acc, _mm256_madd_epi16(va, vb));
            }
            c[mi * n + ni] = avx2_reduce8(acc);
        }
    }
}

NGEMM_TARGET_AVX512 inline void avx512_conv_u8i8_sat(const std::uint8_t* a,
                                                     const std::int8_t* b,
                                                     std::int32_t* c, std::int64_t m,
                                                     std::int64_t n, std::int64_t k) {
    const __m512i ones = _mm512_set1_epi16(1);
    const std::int64_t k_main = k / 64 * 64;
    alignas(64) std::uint8_t a_tail[64];
    alignas(64) std::int8_t b_tail[64];
    for (std::int64_t mi = 0; mi < m; ++mi) {
        const std::uint8_t* arow = a + mi * k;
        for (std::int64_t ni = 0; ni < n; ++ni) {
            const std::int8_t* brow = b + ni * k;
            __m512i acc = _mm512_setzero_si512();
            for (std::int64_t k0 = 0; k0 < k_main; k0 += 64) {
                __m512i va = _mm512_loadu_si512(arow + k0);
                __m512i vb = _mm512_loadu_si512(brow + k0);
                acc = _mm512_add_epi32(
                    acc, _mm512_madd_epi16(_mm512_maddubs_epi16(va, vb), ones));
            }
            if (k_main < k) {
                std::memset(a_tail, 0, sizeof a_tail);
                std::memset(b_tail, 0, sizeof b_tail);
                std::memcpy(a_tail, arow + k_main, static_cast<std::size_t>(k - k_main));
                std::memcpy(b_tail, brow + k_main, static_cast<std::size_t>(k - k_main));
                __m512i va = _mm512_load_si512(a_tail);
                __m512i vb = _mm512_load_si512(b_tail);
                acc = _mm512_add_epi32(
                    acc, _mm512_madd_epi16(_mm512_maddubs_epi16(va, vb), ones));
            }
            c[mi * n + ni] = _mm512_reduce_add_epi32(acc);
        }
    }
}

NGEMM_TARGET_AVX512 inline void avx512_conv_i16(const std::int16_t* a,
                                                const std::int16_t* b,
                                                std::int32_t* c, std::int64_t m,
                                                std::int64_t n, std::int64_t k) {
    const std::int64_t k_main = k / 32 * 32;
    alignas(64) std::int16_t a_tail[32];
    alignas(64) std::int16_t b_tail[32];
    for (std::int64_t mi = 0; mi < m; ++mi) {
        const std::int16_t* arow = a + mi * k;
        for (std::int64_t ni = 0; ni < n; ++ni) {
            const std::int16_t* brow = b + ni * k;
            __m512i acc = _mm512_setzero_si512();
            for (std::int64_t k0 = 0; k0 < k_main; k0 += 32) {
                __m512i va = _mm512_loadu_si512(arow + k0);
                __m512i vb = _mm512_loadu_si512(brow + k0);
                acc = _mm512_add_epi32(acc, _mm512_madd_epi16(va, vb));
            }
            if (k_main < k) {
                std::memset(a_tail, 0, sizeof a_tail);
                std::memset(b_tail, 0, sizeof b_tail);
                std::memcpy(a_tail, arow + k_main,
                            static_cast<std::size_t>(k - k_main) * 2);
                std::memcpy(b_tail, brow + k_main,
                            static_cast<std::size_t>(k - k_main) * 2);
                __m512i va = _mm512_load_si512(a_tail);
                __m512i vb = _mm512_load_si512(b_tail);
                acc = _mm512_add_epi32(acc, _mm512_madd_epi16(va, vb));
            }
            c[mi * n + ni] = _mm512_reduce_add_epi32(acc);
        }
    }
}

NGEMM_TARGET_AVX2 inline void avx2_ngemm_u8i8_sat(const PackedWeight& p,
                                                  const MatrixBuf& b, MatrixBuf& c) {
    const TileConfig& t = p.tile();
    const KernelShape& s = p.shape();
    const std::int64_t n = b.rows();
    const std::int64_t k_orig = p.k_orig();
    const __m256i ones = _mm256_set1_epi16(1);
    const std::uint8_t* pd = p.data<std::uint8_t>();
    std::int32_t* cd = c.row<std::int32_t>(0);
    for (const TileOrigin& o : tile_origins(t, p.m_pad(), n, p.k_pad())) {
        const std::int64_t m_hi = std::min(o.m0 + t.tm, p.m_orig());
        const std::int64_t n_hi = std::min(o.n0 + t.tn, n);
        // Blocks fully inside the K padding contribute nothing; clip them.
        const std::int64_t k_hi = std::min(o.k0 + t.tk, round_up(k_orig, s.h));
        for (std::int64_t mb = o.m0; mb < m_hi; mb += s.v) {
            const std::uint8_t* ablk0 = pd + p.block_offset(mb / s.v, o.k0 / s.h);
            const std::int64_t rows = std::min<std::int64_t>(s.v, p.m_orig() - mb);
            for (std::int64_t ni = o.n0; ni < n_hi; ++ni) {
                const std::int8_t* brow = b.row<std::int8_t>(ni);
                __m256i acc = _mm256_setzero_si256();
                const std::uint8_t* ablk = ablk0;
                for (std::int64_t kk = o.k0; kk < k_hi; kk += s.h, ablk += s.w) {
                    std::int32_t bgroup = 0;
                    std::memcpy(&bgroup, brow + kk,
                                kk + s.h <= k_orig ? 4
                                                   : static_cast<std::size_t>(k_orig - kk));
                    __m256i va = _mm256_loadu_si256(
                        reinterpret_cast<const __m256i*>(ablk));
                    __m256i vb = _mm256_set1_epi32(bgroup);
                    acc = _mm256_add_epi32(
                        acc, _mm256_madd_epi16(_mm256_maddubs_epi16(va, vb), ones));
                }
                alignas(32) std::int32_t lanes[8];
                _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
                std::int32_t* ccol = cd + mb * n + ni;
                for (std::int64_t r = 0; r < rows; ++r)
                    ccol[r * n] = wrap_add_i32(ccol[r * n], lanes[r]);
            }
        }
    }
}

NGEMM_TARGET_AVX2 inline void avx2_ngemm_i16(const PackedWeight& p,
                                             const MatrixBuf& b, MatrixBuf& c) {
    const TileConfig& t = p.tile();
    const KernelShape& s = p.shape();
    const std::int64_t n = b.rows();
    const std::int64_t k_orig = p.k_orig();
    const std::int16_t* pd = p.data<std::int16_t>();
    std::int32_t* cd = c.row<std::int32_t>(0);
    for (const TileOrigin& o : tile_origins(t, p.m_pad(), n, p.k_pad())) {
        const std::int64_t m_hi = std::min(o.m0 + t.tm, p.m_orig());
        const std::int64_t n_hi = std::min(o.n0 + t.tn, n);
        const std::int64_t k_hi = std::min(o.k0 + t.tk, round_up(k_orig, s.h));
        for (std::int64_t mb = o.m0; mb < m_hi; mb += s.v) {
            const std::int16_t* ablk0 = pd + p.block_offset(mb / s.v, o.k0 / s.h);
            const std::int64_t rows = std::min<std::int64_t>(s.v, p.m_orig() - mb);
            for (std::int64_t ni = o.n0; ni < n_hi; ++ni) {
                const std::int16_t* brow = b.row<std::int16_t>(ni);
                __m256i acc = _mm256_setzero_si256();
                const std::int16_t* ablk = ablk0;
                for (std::int64_t kk = o.k0; kk < k_hi; kk += s.h, ablk += s.w) {
                    std::int32_t bgroup = 0;
                    std::memcpy(&bgroup, brow + kk, kk + s.h <= k_orig ? 4 : 2);
                    __m256i va = _mm256_loadu_si256(
                        reinterpret_cast<const __m256i*>(ablk));
                    acc = _mm256_add_epi32(
                        acc, _mm256_madd_epi16(va, _mm256_set1_epi32(bgroup)));
                }
                alignas(32) std::int32_t lanes[8];
                _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
                std::int32_t* ccol = cd + mb * n + ni;
                for (std::int64_t r = 0; r < rows; ++r)
                    ccol[r * n] = wrap_add_i32(ccol[r * n], lanes[r]);
            }
        }
    }
}

NGEMM_TARGET_AVX512 inline void avx512_ngemm_u8i8_sat(const PackedWeight& p,
                                                      const MatrixBuf& b,
                                                      MatrixBuf& c) {
    const TileConfig& t = p.tile();
    const KernelShape& s = p.shape();
    const std::int64_t n = b.rows();
    const std::int64_t k_orig = p.k_orig();
    const __m512i ones = _mm512_set1_epi16(1);
    const std::uint8_t* pd = p.data<std::uint8_t>();
    std::int32_t* cd = c.row<std::int32_t>(0);
    for (const TileOrigin& o : tile_origins(t, p.m_pad(), n, p.k_pad())) {
        const std::int64_t m_hi = std::min(o.m0 + t.tm, p.m_orig());
        const std::int64_t n_hi = std::min(o.n0 + t.tn, n);
        const std::int64_t k_hi = std::min(o.k0 + t.tk, round_up(k_orig, s.h));
        for (std::int64_t mb = o.m0; mb < m_hi; mb += s.v) {
            const std::uint8_t* ablk0 = pd + p.block_offset(mb / s.v, o.k0 / s.h);
            const std::int64_t rows = std::min<std::int64_t>(s.v, p.m_orig() - mb);
            for (std::int64_t ni = o.n0; ni < n_hi; ++ni) {
                const std::int8_t* brow = b.row<std::int8_t>(ni);
                __m512i acc = _mm512_setzero_si512();
                const std::uint8_t* ablk = ablk0;
                for (std::int64_t kk = o.k0; kk < k_hi; kk += s.h, ablk += s.w) {
                    std::int32_t bgroup = 0;
                    std::memcpy(&bgroup, brow + kk,
                                kk + s.h <= k_orig ? 4
                                                   : static_cast<std::size_t>(k_orig - kk));
                    __m512i va = _mm512_loadu_si512(ablk);
                    __m512i vb = _mm512_set1_epi32(bgroup);
                    acc = _mm512_add_epi32(
                        acc, _mm512_madd_epi16(_mm512_maddubs_epi16(va, vb), ones));
                }
                alignas(64) std::int32_t lanes[16];
                _mm512_store_si512(lanes, acc);
                std::int32_t* ccol = cd + mb * n + ni;
                for (std::int64_t r = 0; r < rows; ++r)
                    ccol[r * n] = wrap_add_i32(ccol[r * n], lanes[r]);
            }
        }
    }
}

NGEMM_TARGET_AVX512 inline void avx512_ngemm_i16(const PackedWeight& p,
                                                 const MatrixBuf& b, MatrixBuf& c) {
    const TileConfig& t = p.tile();
    const KernelShape& s = p.shape();
    const std::int64_t n = b.rows();
    const std::int64_t k_orig = p.k_orig();
    const std::int16_t* pd = p.data<std::int16_t>();
    std::int32_t* cd = c.row<std::int32_t>(0);
    for (const TileOrigin& o : tile_origins(t, p.m_pad(), n, p.k_pad())) {
        const std::int64_t m_hi = std::min(o.m0 + t.tm, p.m_orig());
        const std::int64_t n_hi = std::min(o.n0 + t.tn, n);
        const std::int64_t k_hi = std::min(o.k0 + t.tk, round_up(k_orig, s.h));
        for (std::int64_t mb = o.m0; mb < m_hi; mb += s.v) {
            const std::int16_t* ablk0 = pd + p.block_offset(mb / s.v, o.k0 / s.h);
            const std::int64_t rows = std::min<std::int64_t>(s.v, p.m_orig() - mb);
            for (std::int64_t ni = o.n0; ni < n_hi; ++ni) {
                const std::int16_t* brow = b.row<std::int16_t>(ni);
                __m512i acc = _mm512_setzero_si512();
                const std::int16_t* ablk = ablk0;
                for (std::int64_t kk = o.k0; kk < k_hi; kk += s.h, ablk += s.w) {
                    std::int32_t bgroup = 0;
                    std::memcpy(&bgroup, brow + kk, kk + s.h <= k_orig ? 4 : 2);
                    __m512i va = _mm512_loadu_si512(ablk);
                    acc = _mm512_add_epi32(
                        acc, _mm512_madd_epi16(va, _mm512_set1_epi32(bgroup)));
                }
                alignas(64) std::int32_t lanes[16];
                _mm512_store_si512(lanes, acc);
                std::int32_t* ccol = cd + mb * n + ni;
                for (std::int64_t r = 0; r < rows; ++r)
                    ccol[r * n] = wrap_add_i32(ccol[r * n], lanes[r]);
            }
        }
    }
}

#endif // NGEMM_X86_NATIVE

} // namespace native
} // namespace ngemm
