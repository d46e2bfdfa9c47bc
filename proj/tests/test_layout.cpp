#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>
#include <string>

#include "ngemm/layout.hpp"
#include "ngemm/matrix.hpp"

using namespace ngemm;

TEST_CASE("kernel_shape reproduces the (isa, dtype) table") {
    CHECK(kernel_shape(IsaProfile::v256(), ElemKind::U8) == KernelShape{32, 4, 8});
    CHECK(kernel_shape(IsaProfile::v256(), ElemKind::I16) == KernelShape{16, 2, 8});
    CHECK(kernel_shape(IsaProfile::v512(), ElemKind::U8) == KernelShape{64, 4, 16});
    CHECK(kernel_shape(IsaProfile::v512(), ElemKind::I16) == KernelShape{32, 2, 16});
    // i8 shares the 8-bit path with u8.
    CHECK(kernel_shape(IsaProfile::v256(), ElemKind::I8) == KernelShape{32, 4, 8});
    // scalar profile emulates at 128-bit granularity
    CHECK(kernel_shape(IsaProfile::scalar(), ElemKind::U8) == KernelShape{16, 4, 4});
    CHECK(kernel_shape(IsaProfile::scalar(), ElemKind::I16) == KernelShape{8, 2, 4});
}

TEST_CASE("kernel_shape invariants v*h == w") {
    for (IsaProfile isa : {IsaProfile::scalar(), IsaProfile::v256(), IsaProfile::v512()})
        for (ElemKind kind : {ElemKind::U8, ElemKind::I8, ElemKind::I16}) {
            KernelShape s = kernel_shape(isa, kind);
            CHECK(s.v * s.h == s.w);
            CHECK(s.w == isa.vector_bits / elem_bits(kind));
        }
}

TEST_CASE("kernel_shape rejects i32") {
    CHECK_THROWS_AS(kernel_shape(IsaProfile::v256(), ElemKind::I32), UnsupportedError);
}

TEST_CASE("inner_offset zigzag order") {
    KernelShape s{32, 4, 8};
    CHECK(inner_offset(0, 0, s) == 0);
    CHECK(inner_offset(1, 2, s) == 6);
    CHECK_THROWS_AS(inner_offset(8, 0, s), IndexError);
    CHECK_THROWS_AS(inner_offset(0, 4, s), IndexError);
    CHECK_THROWS_AS(inner_offset(-1, 0, s), IndexError);
}

TEST_CASE("inner_offset is a bijection for both (h,v) pairs") {
    for (KernelShape s : {KernelShape{32, 4, 8}, KernelShape{16, 2, 8},
                          KernelShape{64, 4, 16}, KernelShape{32, 2, 16}}) {
        std::set<int> seen;
        for (int m = 0; m < s.v; ++m)
            for (int k = 0; k < s.h; ++k) {
                int off = inner_offset(m, k, s);
                CHECK(off >= 0);
                CHECK(off < s.w);
                seen.insert(off);
            }
        CHECK(seen.size() == static_cast<std::size_t>(s.w));
    }
}

TEST_CASE("pack_weights 2x2 example") {
    MatrixBuf a(ElemKind::U8, 2, 2);
    a.set(0, 0, 1);
    a.set(0, 1, 2);
    a.set(1, 0, 3);
    a.set(1, 1, 4);
    KernelShape s{32, 4, 8};
    PackedWeight p = pack_weights(a, s, TileConfig{8, 1, 4, Perm::MNK});
    REQUIRE(p.m_pad() == 8);
    REQUIRE(p.k_pad() == 4);
    REQUIRE(p.byte_size() == 32);
    const std::uint8_t* d = p.data<std::uint8_t>();
    // first block row: row 0 of A padded to h
    CHECK(d[0] == 1);
    CHECK(d[1] == 2);
    CHECK(d[2] == 0);
    CHECK(d[3] == 0);
    // second block row: row 1
    CHECK(d[4] == 3);
    CHECK(d[5] == 4);
    CHECK(d[6] == 0);
    CHECK(d[7] == 0);
    for (int i = 8; i < 32; ++i) CHECK(d[i] == 0);
}

TEST_CASE("pack_weights zero matrix gives w zeros") {
    KernelShape s{32, 4, 8};
    MatrixBuf a(ElemKind::U8, s.v, s.h);
    PackedWeight p = pack_weights(a, s, TileConfig{8, 1, 4, Perm::MNK});
    REQUIRE(p.byte_size() == static_cast<std::size_t>(s.w));
    for (int i = 0; i < s.w; ++i) CHECK(p.data<std::uint8_t>()[i] == 0);
}

TEST_CASE("pack_weights 16x8 tiling arithmetic") {
    KernelShape s{32, 4, 8};
    MatrixBuf a = mat_random(ElemKind::U8, 16, 8, 11, 0, 255);
    PackedWeight p = pack_weights(a, s, TileConfig{8, 1, 4, Perm::MNK});
    // 2x2 tiles of tm x tk = 8x4, one v-by-h block each; no padding.
    CHECK(p.m_pad() == 16);
    CHECK(p.k_pad() == 8);
    CHECK(p.m_pad() * p.k_pad() == 128);
    CHECK(p.byte_size() == 128);
    CHECK(unpack_weights(p) == a);
}

TEST_CASE("pack traversal follows the permutation's M/K order") {
    // 16x8 with single-block tiles: four tiles T(mi, ki). M-before-K
    // permutations store K tiles of one M strip contiguously; K-before-M
    // permutations invert that.
    KernelShape s{32, 4, 8};
    MatrixBuf a(ElemKind::U8, 16, 8);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 8; ++c) a.set(r, c, (r / 8) * 2 + (c / 4) + 1); // tile id
    TileConfig mnk{8, 1, 4, Perm::MNK};
    TileConfig knm{8, 1, 4, Perm::KNM};
    PackedWeight p1 = pack_weights(a, s, mnk);
    PackedWeight p2 = pack_weights(a, s, knm);
    auto tile_of = [&](const PackedWeight& p, int idx) {
        return p.data<std::uint8_t>()[idx * 32];
    };
    CHECK(tile_of(p1, 0) == 1);
    CHECK(tile_of(p1, 1) == 2);
    CHECK(tile_of(p1, 2) == 3);
    CHECK(tile_of(p1, 3) == 4);
    CHECK(tile_of(p2, 0) == 1);
    CHECK(tile_of(p2, 1) == 3);
    CHECK(tile_of(p2, 2) == 2);
    CHECK(tile_of(p2, 3) == 4);
    CHECK(unpack_weights(p1) == a);
    CHECK(unpack_weights(p2) == a);
}

TEST_CASE("within a tile blocks go K first, then down M") {
    KernelShape s{32, 4, 8};
    MatrixBuf a(ElemKind::U8, 16, 8);
    // mark each v-by-h block with its (m_blk, k_blk) id
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 8; ++c) a.set(r, c, (r / 8) * 2 + (c / 4) + 1);
    // one tile covering the whole matrix: tm=16 (beta=2), tk=8 (alpha=2)
    PackedWeight p = pack_weights(a, s, TileConfig{16, 1, 8, Perm::MNK});
    const std::uint8_t* d = p.data<std::uint8_t>();
    CHECK(d[0 * 32] == 1); // (m_blk 0, k_blk 0)
    CHECK(d[1 * 32] == 2); // (m_blk 0, k_blk 1)  <- K advances first
    CHECK(d[2 * 32] == 3); // (m_blk 1, k_blk 0)
    CHECK(d[3 * 32] == 4);
}

TEST_CASE("pack/unpack round trip with tails") {
    KernelShape s{32, 4, 8};
    MatrixBuf a = mat_random(ElemKind::U8, 37, 101, 5, 0, 255);
    PackedWeight p = pack_weights(a, s, TileConfig{8, 1, 4, Perm::MNK});
    CHECK(p.m_pad() == 40);
    CHECK(p.k_pad() == 104);
    CHECK(unpack_weights(p) == a);
}

TEST_CASE("pack/unpack exhaustive small sweep") {
    KernelShape s{16, 4, 4}; // scalar-profile 8-bit shape keeps the sweep fast
    TileConfig tile{8, 1, 8, Perm::MNK}; // beta=2, alpha=2
    int seed = 100;
    for (std::int64_t m = 1; m <= 3 * tile.tm; ++m) {
        for (std::int64_t k = 1; k <= 3 * tile.tk; ++k) {
            MatrixBuf a = mat_random(ElemKind::U8, m, k, ++seed, 0, 255);
            PackedWeight p = pack_weights(a, s, tile);
            REQUIRE(unpack_weights(p) == a);
        }
    }
}

TEST_CASE("packing is layout-only: values stay at their coordinates") {
    KernelShape s{16, 2, 8};
    MatrixBuf a = mat_random(ElemKind::I16, 13, 9, 77, -999, 999);
    PackedWeight p = pack_weights(a, s, TileConfig{16, 4, 6, Perm::NMK});
    for (std::int64_t r = 0; r < a.rows(); ++r)
        for (std::int64_t c = 0; c < a.cols(); ++c)
            CHECK(p.data<std::int16_t>()[p.elem_offset(r, c)] == a.get(r, c));
    // padding invariant: everything outside the original coords is zero
    std::int64_t pad_sum = 0;
    for (std::int64_t r = 0; r < p.m_pad(); ++r)
        for (std::int64_t c = 0; c < p.k_pad(); ++c)
            if (r >= a.rows() || c >= a.cols())
                pad_sum += std::abs(p.data<std::int16_t>()[p.elem_offset(r, c)]);
    CHECK(pad_sum == 0);
}

TEST_CASE("unpack detects poked pad cells") {
    KernelShape s{32, 4, 8};
    MatrixBuf a = mat_random(ElemKind::U8, 5, 5, 3, 1, 255);
    PackedWeight p = pack_weights(a, s, TileConfig{8, 1, 4, Perm::MNK});
    // coordinate (7, 0) is padding (m_orig = 5)
    p.data<std::uint8_t>()[p.elem_offset(7, 0)] = 42;
    CHECK_THROWS_AS(unpack_weights(p), CorruptionError);
}

TEST_CASE("pack rejects bad tiles and kinds") {
    KernelShape s{32, 4, 8};
    MatrixBuf a = mat_random(ElemKind::U8, 4, 4, 1, 0, 255);
    CHECK_THROWS_AS(pack_weights(a, s, TileConfig{7, 1, 4, Perm::MNK}), ConfigError);
    CHECK_THROWS_AS(pack_weights(a, s, TileConfig{8, 1, 5, Perm::MNK}), ConfigError);
    CHECK_THROWS_AS(pack_weights(a, s, TileConfig{8, 0, 4, Perm::MNK}), ConfigError);
    MatrixBuf wide(ElemKind::I32, 4, 4);
    CHECK_THROWS_AS(pack_weights(wide, s, TileConfig{8, 1, 4, Perm::MNK}),
                    UnsupportedError);
    // 16-bit matrix against an 8-bit shape
    MatrixBuf a16 = mat_random(ElemKind::I16, 4, 4, 1, 0, 9);
    CHECK_THROWS_AS(pack_weights(a16, s, TileConfig{8, 1, 4, Perm::MNK}), ConfigError);
}

TEST_CASE("packed file round trip") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "ngemm_packed_rt.pkg").string();
    KernelShape s{32, 4, 8};
    MatrixBuf a = mat_random(ElemKind::U8, 19, 23, 8, 0, 255);
    TileConfig tile{16, 4, 8, Perm::NMK};
    PackedWeight p = pack_weights(a, s, tile);
    packed_write(p, path);
    PackedWeight q = packed_read(path);
    CHECK(q.kind() == p.kind());
    CHECK(q.shape() == p.shape());
    CHECK(q.tile() == tile);
    CHECK(q.m_orig() == 19);
    CHECK(q.k_orig() == 23);
    CHECK(std::equal(p.bytes(), p.bytes() + p.byte_size(), q.bytes()));
    CHECK(unpack_weights(q) == a);

    SECTION("plain matrix file is rejected as packed input") {
        mat_write(a, path);
        CHECK_THROWS_AS(packed_read(path), FormatError);
    }
    SECTION("packed file is rejected as plain matrix input") {
        CHECK_THROWS_AS(mat_read(path), FormatError);
    }
    std::filesystem::remove(path);
}
