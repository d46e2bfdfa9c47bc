#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ngemm/common.hpp"
#include "ngemm/gemm.hpp"
#include "ngemm/isa.hpp"
#include "ngemm/layout.hpp"
#include "ngemm/matrix.hpp"

namespace ngemm {

// Safe operand ranges: chosen so the saturating and exact kernels agree,
// which lets one reference oracle verify every timed run. The u8 operand is
// capped at 127 (127*127*2 and 127*-128*2 both fit i16); i16 never
// saturates, so it keeps its full domain.
inline std::pair<std::int64_t, std::int64_t> safe_range(ElemKind kind) {
    switch (kind) {
    case ElemKind::U8:
        return {0, 127};
    case ElemKind::I8:
        return {-128, 127};
    case ElemKind::I16:
        return {-32768, 32767};
    default:
        throw UnsupportedError("safe_range: no kernel path for i32");
    }
}

inline MatrixBuf random_operand(ElemKind kind, std::int64_t rows, std::int64_t cols,
                                std::uint64_t seed) {
    auto [lo, hi] = safe_range(kind);
    return mat_random(kind, rows, cols, seed, lo, hi);
}

// The alpha/beta/tn/permutation grid to explore; tile sizes are derived as
// tm = beta*v, tk = alpha*h.
struct TuneSpace {
    std::vector<std::int64_t> alphas;
    std::vector<std::int64_t> betas;
    std::vector<std::int64_t> tns;
    std::vector<Perm> permutations;

    static TuneSpace defaults() {
        return {{1, 2, 4}, {1, 2, 4}, {1, 4, 16, 64}, {Perm::MNK, Perm::NMK}};
    }
};

// Cartesian product of the grid, filtered to tiles that fit the problem:
// a tile may not exceed the minimally padded matrix (M rounded up to v,
// K rounded up to h) nor may tn exceed N. Deterministic order: beta, then
// alpha, then tn, then permutation.
inline std::vector<TileConfig> enumerate_space(const TuneSpace& space,
                                               const KernelShape& shape,
                                               const GemmProblem& problem) {
    if (space.alphas.empty() || space.betas.empty() || space.tns.empty() ||
        space.permutations.empty())
        throw ConfigError("enumerate_space: empty candidate axis");
    const std::int64_t m_ceil = round_up(problem.m, shape.v);
    const std::int64_t k_ceil = round_up(problem.k, shape.h);
    std::vector<TileConfig> out;
    for (std::int64_t beta : space.betas) {
        for (std::int64_t alpha : space.alphas) {
            if (alpha < 1 || beta < 1)
                throw ConfigError("enumerate_space: alpha/beta must be >= 1");
            const std::int64_t tm = beta * shape.v;
            const std::int64_t tk = alpha * shape.h;
            if (tm > m_ceil || tk > k_ceil) continue;
            for (std::int64_t tn : space.tns) {
                if (tn < 1) throw ConfigError("enumerate_space: tn must be >= 1");
                if (tn > problem.n) continue;
                for (Perm perm : space.permutations)
                    out.push_back(TileConfig{tm, tn, tk, perm});
            }
        }
    }
    if (out.empty())
        throw ConfigError("enumerate_space: no candidate tile fits the problem");
    return out;
}

struct TuneRecord {
    GemmProblem problem;
    Isa isa = Isa::SCALAR;
    TileConfig best;
    double median_ns = 0;
    int trials = 0;
    std::int64_t timestamp = 0;
};

// Runs one ngemm invocation and reports its wall time in ns. Tests inject
// shims here (slowdowns, deterministic clocks, corrupted outputs); the
// default runs the real kernel under a monotonic clock.
using TuneRunner = std::function<double(const TileConfig& cfg, const PackedWeight& p,
                                        const MatrixBuf& b, MatrixBuf& c_out)>;

inline TuneRunner default_tune_runner(SatMode mode = SatMode::HardwareSaturating,
                                      Engine engine = Engine::Auto) {
    return [mode, engine](const TileConfig&, const PackedWeight& p,
                          const MatrixBuf& b, MatrixBuf& c_out) -> double {
        auto t0 = std::chrono::steady_clock::now();
        c_out = gemm_ngemm(p, b, mode, engine);
        auto t1 = std::chrono::steady_clock::now();
        return static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    };
}

namespace detail {

inline double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

} // namespace detail

// Exhaustive search: times every candidate on fixed-seed inputs, median of
// `repeats` runs after `warmup` discards, and returns the argmin. Every
// timed run is checked against gemm_ref before its timing counts; any
// mismatch aborts the search naming the offending config.
inline TuneRecord tune(const GemmProblem& problem, const TuneSpace& space,
                       IsaProfile isa, int repeats, int warmup,
                       std::uint64_t seed = 42, TuneRunner runner = {}) {
    if (repeats < 3) throw ConfigError("tune: repeats must be >= 3");
    if (warmup < 1) throw ConfigError("tune: warmup must be >= 1");
    if (!runner) runner = default_tune_runner();

    const KernelShape shape = kernel_shape(isa, problem.a_kind);
    const std::vector<TileConfig> configs = enumerate_space(space, shape, problem);

    MatrixBuf a = random_operand(problem.a_kind, problem.m, problem.k, seed);
    MatrixBuf b = random_operand(problem.b_kind, problem.n, problem.k, seed + 1);
    const MatrixBuf ref = gemm_ref(a, b, problem);

    TuneRecord record;
    record.problem = problem;
    record.isa = isa.name;
    record.trials = repeats;
    bool have_best = false;

    for (const TileConfig& cfg : configs) {
        PackedWeight packed = pack_weights(a, shape, cfg);
        MatrixBuf c(ElemKind::I32, problem.m, problem.n);
        auto run_verified = [&]() -> double {
            double ns = runner(cfg, packed, b, c);
            if (!(c == ref))
                throw TuneError("tune: output mismatch vs reference for config " +
                                cfg.to_string());
            return ns;
        };
        for (int i = 0; i < warmup; ++i) run_verified();
        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(repeats));
        for (int i = 0; i < repeats; ++i) times.push_back(run_verified());
        const double med = detail::median_of(std::move(times));
        if (!have_best || med < record.median_ns) {
            record.best = cfg;
            record.median_ns = med;
            have_best = true;
        }
    }
    record.timestamp = static_cast<std::int64_t>(std::time(nullptr));
    return record;
}

// --- tune store -------------------------------------------------------------
//
// Append-only text store, one record per line, space-separated fields in
// fixed order:
//
//   M N K kind isa tm tn tk perm median_ns trials timestamp
//
// kind is "u8i8" or "i16"; perm is one of mnk|mkn|nmk|nkm|kmn|knm. The last
// matching line wins on lookup.

inline const char* kind_pair_name(ElemKind a_kind) {
    return a_kind == ElemKind::U8 ? "u8i8" : "i16";
}

inline std::pair<ElemKind, ElemKind> kind_pair_from_name(const std::string& s) {
    if (s == "u8i8") return {ElemKind::U8, ElemKind::I8};
    if (s == "i16") return {ElemKind::I16, ElemKind::I16};
    throw ConfigError("unknown kind \"" + s + "\" (expected u8i8|i16)");
}

inline void tune_store_append(const std::string& path, const TuneRecord& r) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw Error("cannot open tune store " + path);
    f << r.problem.m << ' ' << r.problem.n << ' ' << r.problem.k << ' '
      << kind_pair_name(r.problem.a_kind) << ' ' << isa_name(r.isa) << ' '
      << r.best.tm << ' ' << r.best.tn << ' ' << r.best.tk << ' '
      << perm_name(r.best.permutation) << ' ' << r.median_ns << ' ' << r.trials
      << ' ' << r.timestamp << '\n';
    if (!f) throw Error("write failed: " + path);
}

inline std::optional<TuneRecord> tune_store_lookup(const std::string& path,
                                                   const GemmProblem& problem,
                                                   Isa isa) {
    std::ifstream f(path);
    if (!f) return std::nullopt;
    std::optional<TuneRecord> found;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::int64_t m, n, k;
        std::string kind_s, isa_s, perm_s;
        TileConfig cfg;
        double median_ns;
        int trials;
        std::int64_t timestamp;
        if (!(ss >> m >> n >> k >> kind_s >> isa_s >> cfg.tm >> cfg.tn >> cfg.tk >>
              perm_s >> median_ns >> trials >> timestamp))
            throw FormatError("malformed tune store line " + std::to_string(lineno),
                              0);
        auto [ak, bk] = kind_pair_from_name(kind_s);
        if (m != problem.m || n != problem.n || k != problem.k ||
            ak != problem.a_kind || isa_from_name(isa_s) != isa)
            continue;
        cfg.permutation = perm_from_name(perm_s);
        TuneRecord r;
        r.problem = GemmProblem(m, n, k, ak, bk);
        r.isa = isa;
        r.best = cfg;
        r.median_ns = median_ns;
        r.trials = trials;
        r.timestamp = timestamp;
        found = r;
    }
    return found;
}

} // namespace ngemm
