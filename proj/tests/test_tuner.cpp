#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "ngemm/tuner.hpp"

using namespace ngemm;

TEST_CASE("enumerate_space singleton") {
    TuneSpace space{{1}, {1}, {1}, {Perm::MNK}};
    KernelShape s{32, 4, 8};
    auto configs = enumerate_space(space, s, GemmProblem::u8i8(16, 16, 16));
    REQUIRE(configs.size() == 1);
    CHECK(configs[0] == TileConfig{8, 1, 4, Perm::MNK});
}

TEST_CASE("enumerate_space product count") {
    TuneSpace space{{1, 2}, {1, 2}, {4}, {Perm::MNK, Perm::NMK}};
    KernelShape s{32, 4, 8};
    auto configs = enumerate_space(space, s, GemmProblem::u8i8(64, 64, 64));
    CHECK(configs.size() == 8);
}

TEST_CASE("enumerate_space filters tiles that exceed the padded problem") {
    TuneSpace space{{1, 2}, {1, 2}, {4}, {Perm::MNK, Perm::NMK}};
    KernelShape s{32, 4, 8};
    // M=8 pads to 8 under v=8, so beta=2 (tm=16) is filtered out.
    auto configs = enumerate_space(space, s, GemmProblem::u8i8(8, 64, 64));
    CHECK(configs.size() == 4);
    for (const TileConfig& c : configs) CHECK(c.tm == 8);
}

TEST_CASE("enumerate_space rejects an empty filtered space") {
    TuneSpace space{{4}, {4}, {128}, {Perm::MNK}};
    KernelShape s{32, 4, 8};
    CHECK_THROWS_AS(enumerate_space(space, s, GemmProblem::u8i8(4, 4, 4)), ConfigError);
}

TEST_CASE("tune preconditions") {
    TuneSpace space{{1}, {1}, {1}, {Perm::MNK}};
    GemmProblem problem = GemmProblem::u8i8(8, 4, 8);
    CHECK_THROWS_AS(tune(problem, space, IsaProfile::scalar(), 1, 1), ConfigError);
    CHECK_THROWS_AS(tune(problem, space, IsaProfile::scalar(), 3, 0), ConfigError);
}

TEST_CASE("tune on a singleton space returns that config") {
    TuneSpace space{{1}, {1}, {1}, {Perm::MNK}};
    GemmProblem problem = GemmProblem::u8i8(8, 4, 8);
    TuneRecord r = tune(problem, space, IsaProfile::scalar(), 3, 1);
    CHECK(r.best == TileConfig{4, 1, 4, Perm::MNK});
    CHECK(r.median_ns > 0);
    CHECK(r.trials == 3);
    CHECK(r.timestamp > 0);
}

TEST_CASE("a slowed-down config is never selected") {
    TuneSpace space{{1, 2}, {1}, {1, 2}, {Perm::MNK}};
    GemmProblem problem = GemmProblem::u8i8(16, 8, 16);
    const TileConfig dominated{4, 1, 8, Perm::MNK}; // scalar shape: v=4, h=4
    // deterministic-time shim: computes the real result, reports a synthetic
    // time, 10x for the dominated config
    TuneRunner shim = [&](const TileConfig& cfg, const PackedWeight& p,
                          const MatrixBuf& b, MatrixBuf& c_out) -> double {
        c_out = gemm_ngemm(p, b, SatMode::HardwareSaturating, Engine::Emulated);
        double base = 1000.0 + static_cast<double>(cfg.tk);
        return cfg == dominated ? 10.0 * base : base;
    };
    for (int round = 0; round < 3; ++round) {
        TuneRecord r = tune(problem, space, IsaProfile::scalar(), 3, 1, 42, shim);
        CHECK_FALSE(r.best == dominated);
    }
}

TEST_CASE("deterministic shim makes tuning reproducible") {
    TuneSpace space{{1, 2}, {1, 2}, {1, 4}, {Perm::MNK, Perm::NMK}};
    GemmProblem problem = GemmProblem::u8i8(16, 8, 16);
    TuneRunner shim = [](const TileConfig& cfg, const PackedWeight& p,
                         const MatrixBuf& b, MatrixBuf& c_out) -> double {
        c_out = gemm_ngemm(p, b, SatMode::HardwareSaturating, Engine::Emulated);
        // arbitrary but fixed preference order
        return 5000.0 - 7.0 * static_cast<double>(cfg.tm) -
               3.0 * static_cast<double>(cfg.tn) + static_cast<double>(cfg.tk);
    };
    TuneRecord r1 = tune(problem, space, IsaProfile::scalar(), 3, 1, 42, shim);
    TuneRecord r2 = tune(problem, space, IsaProfile::scalar(), 3, 1, 42, shim);
    CHECK(r1.best == r2.best);
    CHECK(r1.median_ns == r2.median_ns);
}

TEST_CASE("a mis-computing config aborts tuning") {
    TuneSpace space{{1, 2}, {1}, {1}, {Perm::MNK}};
    GemmProblem problem = GemmProblem::u8i8(8, 4, 16);
    const std::int64_t bad_tk = 8; // alpha=2 under h=4
    TuneRunner shim = [&](const TileConfig& cfg, const PackedWeight& p,
                          const MatrixBuf& b, MatrixBuf& c_out) -> double {
        c_out = gemm_ngemm(p, b, SatMode::HardwareSaturating, Engine::Emulated);
        if (cfg.tk == bad_tk) c_out.set(0, 0, c_out.get(0, 0) + 1);
        return 1000.0;
    };
    CHECK_THROWS_AS(tune(problem, space, IsaProfile::scalar(), 3, 1, 42, shim),
                    TuneError);
    try {
        tune(problem, space, IsaProfile::scalar(), 3, 1, 42, shim);
    } catch (const TuneError& e) {
        // the error names the offending config
        CHECK(std::string(e.what()).find("tk=8") != std::string::npos);
    }
}

TEST_CASE("selected config is always a member of the space") {
    TuneSpace space{{1, 2}, {1, 2}, {1, 2}, {Perm::MNK, Perm::NMK}};
    GemmProblem problem = GemmProblem::u8i8(16, 4, 16);
    KernelShape shape = kernel_shape(IsaProfile::scalar(), problem.a_kind);
    auto configs = enumerate_space(space, shape, problem);
    TuneRecord r = tune(problem, space, IsaProfile::scalar(), 3, 1);
    bool member = false;
    for (const TileConfig& c : configs) member = member || c == r.best;
    CHECK(member);
}

TEST_CASE("tune store round trip and last-wins lookup") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "ngemm_tune_store.txt").string();
    std::filesystem::remove(path);

    GemmProblem problem = GemmProblem::u8i8(8, 4, 8);
    TuneRecord r;
    r.problem = problem;
    r.isa = Isa::V256;
    r.best = TileConfig{8, 4, 4, Perm::NMK};
    r.median_ns = 1234.5;
    r.trials = 5;
    r.timestamp = 1700000000;
    tune_store_append(path, r);

    auto found = tune_store_lookup(path, problem, Isa::V256);
    REQUIRE(found.has_value());
    CHECK(found->best == r.best);
    CHECK(found->median_ns == Catch::Approx(1234.5));

    // append a newer record for the same key; lookup returns it
    r.best = TileConfig{8, 1, 8, Perm::MNK};
    r.median_ns = 999.0;
    tune_store_append(path, r);
    found = tune_store_lookup(path, problem, Isa::V256);
    REQUIRE(found.has_value());
    CHECK(found->best == TileConfig{8, 1, 8, Perm::MNK});

    // different key misses
    CHECK_FALSE(tune_store_lookup(path, problem, Isa::V512).has_value());
    CHECK_FALSE(
        tune_store_lookup(path, GemmProblem::u8i8(8, 4, 9), Isa::V256).has_value());
    // i16 problem with same dims misses too
    CHECK_FALSE(
        tune_store_lookup(path, GemmProblem::i16(8, 4, 8), Isa::V256).has_value());

    std::filesystem::remove(path);
}
