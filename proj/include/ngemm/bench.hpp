#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ngemm/common.hpp"
#include "ngemm/gemm.hpp"
#include "ngemm/isa.hpp"
#include "ngemm/latency_model.hpp"
#include "ngemm/layout.hpp"
#include "ngemm/matrix.hpp"
#include "ngemm/tuner.hpp"

namespace ngemm {

struct ProblemSize {
    std::int64_t m = 0, n = 0, k = 0;
};

// "MxNxK[,MxNxK...]"
inline std::vector<ProblemSize> parse_sizes(const std::string& spec) {
    std::vector<ProblemSize> out;
    std::istringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        ProblemSize p;
        char x1, x2;
        std::istringstream is(item);
        if (!(is >> p.m >> x1 >> p.n >> x2 >> p.k) || x1 != 'x' || x2 != 'x' ||
            p.m < 1 || p.n < 1 || p.k < 1 || (is >> item))
            throw ConfigError("bad size \"" + item + "\" (expected MxNxK)");
        out.push_back(p);
    }
    if (out.empty()) throw ConfigError("empty size list");
    return out;
}

// The stock sweep: M=N in {64, 256} crossed with K in {128, 256, 512, 1024}.
inline std::vector<ProblemSize> default_sweep_sizes() {
    std::vector<ProblemSize> out;
    for (std::int64_t mn : {64, 256})
        for (std::int64_t k : {128, 256, 512, 1024}) out.push_back({mn, mn, k});
    return out;
}

struct TimingStats {
    double median_ns = 0;
    double min_ns = 0;
    int trials = 0;
};

template <typename Fn>
TimingStats time_fn(Fn&& fn, int repeats, int warmup) {
    if (repeats < 1) throw ConfigError("time_fn: repeats must be >= 1");
    for (int i = 0; i < warmup; ++i) fn();
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        samples.push_back(static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
    TimingStats st;
    st.trials = repeats;
    st.min_ns = *std::min_element(samples.begin(), samples.end());
    st.median_ns = detail::median_of(std::move(samples));
    return st;
}

// One measurement row of the sweep CSV.
struct BenchRow {
    std::int64_t m = 0, n = 0, k = 0;
    std::string kind;    // u8i8 | i16
    std::string isa;     // scalar | v256 | v512
    std::string variant; // conventional | ngemm
    double median_ns = 0;
    double min_ns = 0;
    int trials = 0;
    std::int64_t checksum = 0;
};

inline constexpr const char* kBenchCsvHeader =
    "m,n,k,kind,isa,variant,median_ns,min_ns,trials,checksum";

namespace detail {

// Locale-independent double formatting (the CSV must be schema-stable no
// matter the host locale).
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 1);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, std::size_t lineno) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError("bad number \"" + s + "\" in CSV line " +
                          std::to_string(lineno), 0);
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline std::string bench_row_csv(const BenchRow& r) {
    std::ostringstream os;
    os << r.m << ',' << r.n << ',' << r.k << ',' << r.kind << ',' << r.isa << ','
       << r.variant << ',' << detail::fmt_double(r.median_ns) << ','
       << detail::fmt_double(r.min_ns) << ',' << r.trials << ',' << r.checksum;
    return os.str();
}

// Geometric mean of per-problem ngemm speedups (conventional median over
// ngemm median), pairing rows by (m, n, k, kind, isa).
inline double geomean_speedup(const std::vector<BenchRow>& rows) {
    std::map<std::string, std::pair<double, double>> by_problem;
    for (const BenchRow& r : rows) {
        std::string key = std::to_string(r.m) + "," + std::to_string(r.n) + "," +
                          std::to_string(r.k) + "," + r.kind + "," + r.isa;
        if (r.variant == "conventional")
            by_problem[key].first = r.median_ns;
        else if (r.variant == "ngemm")
            by_problem[key].second = r.median_ns;
    }
    double log_sum = 0;
    int count = 0;
    for (const auto& [key, pair] : by_problem) {
        if (pair.first <= 0 || pair.second <= 0)
            throw Error("geomean_speedup: unpaired or non-positive timings for " + key);
        log_sum += std::log(pair.first / pair.second);
        ++count;
    }
    if (count == 0) throw Error("geomean_speedup: no paired rows");
    return std::exp(log_sum / count);
}

inline void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows,
                            std::optional<double> geomean = std::nullopt) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << kBenchCsvHeader << '\n';
    for (const BenchRow& r : rows) f << bench_row_csv(r) << '\n';
    if (geomean)
        f << "# geomean_speedup_ngemm_vs_conventional=" << detail::fmt_double(*geomean)
          << '\n';
    if (!f) throw Error("write failed: " + path);
}

inline std::vector<BenchRow> read_bench_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != kBenchCsvHeader)
        throw FormatError("missing or wrong CSV header in " + path, 0);
    std::vector<BenchRow> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols = detail::split_csv_line(line);
        if (cols.size() != 10)
            throw FormatError("expected 10 columns in CSV line " +
                              std::to_string(lineno), 0);
        BenchRow r;
        r.m = std::stoll(cols[0]);
        r.n = std::stoll(cols[1]);
        r.k = std::stoll(cols[2]);
        r.kind = cols[3];
        r.isa = cols[4];
        r.variant = cols[5];
        r.median_ns = detail::parse_double(cols[6], lineno);
        r.min_ns = detail::parse_double(cols[7], lineno);
        r.trials = std::stoi(cols[8]);
        r.checksum = std::stoll(cols[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

struct BenchConfig {
    std::vector<ProblemSize> sizes = default_sweep_sizes();
    std::vector<ElemKind> a_kinds = {ElemKind::U8, ElemKind::I16};
    IsaProfile isa = IsaProfile::of(host_isa());
    SatMode mode = SatMode::HardwareSaturating;
    Engine engine = Engine::Auto;
    int repeats = 7;
    int warmup = 2;
    std::uint64_t seed = 42;
    // Tile for the packed kernel; tn is clamped to N per problem.
    std::int64_t alpha = 1, beta = 1, tn = 64;
    Perm permutation = Perm::MNK;
};

// Runs the sweep: for each (size, kind), inputs are generated in the safe
// range, both kernels are verified against gemm_ref once, then timed.
// No unverified timing ever reaches the report.
inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    std::vector<BenchRow> rows;
    for (ElemKind a_kind : cfg.a_kinds) {
        const KernelShape shape = kernel_shape(cfg.isa, a_kind);
        for (const ProblemSize& sz : cfg.sizes) {
            const ElemKind b_kind = a_kind == ElemKind::U8 ? ElemKind::I8 : ElemKind::I16;
            const GemmProblem problem(sz.m, sz.n, sz.k, a_kind, b_kind);
            MatrixBuf a = random_operand(a_kind, sz.m, sz.k, cfg.seed);
            MatrixBuf b = random_operand(b_kind, sz.n, sz.k, cfg.seed + 1);
            const MatrixBuf ref = gemm_ref(a, b, problem);
            const std::int64_t checksum = ref.checksum();

            TileConfig tile{cfg.beta * shape.v, std::min(cfg.tn, sz.n),
                            cfg.alpha * shape.h, cfg.permutation};
            PackedWeight packed = pack_weights(a, shape, tile);

            const std::string size_str = std::to_string(sz.m) + "x" +
                                         std::to_string(sz.n) + "x" +
                                         std::to_string(sz.k);
            if (!(gemm_conventional(a, b, shape, cfg.mode, cfg.engine) == ref))
                throw Error("bench: conventional kernel failed verification at " +
                            size_str);
            if (!(gemm_ngemm(packed, b, cfg.mode, cfg.engine) == ref))
                throw Error("bench: ngemm kernel failed verification at " + size_str);

            BenchRow base;
            base.m = sz.m;
            base.n = sz.n;
            base.k = sz.k;
            base.kind = kind_pair_name(a_kind);
            base.isa = isa_name(cfg.isa.name);
            base.checksum = checksum;

            BenchRow conv = base;
            conv.variant = "conventional";
            TimingStats st = time_fn(
                [&] { gemm_conventional(a, b, shape, cfg.mode, cfg.engine); },
                cfg.repeats, cfg.warmup);
            conv.median_ns = st.median_ns;
            conv.min_ns = st.min_ns;
            conv.trials = st.trials;
            rows.push_back(conv);

            BenchRow ng = base;
            ng.variant = "ngemm";
            st = time_fn([&] { gemm_ngemm(packed, b, cfg.mode, cfg.engine); },
                         cfg.repeats, cfg.warmup);
            ng.median_ns = st.median_ns;
            ng.min_ns = st.min_ns;
            ng.trials = st.trials;
            rows.push_back(ng);
        }
    }
    return rows;
}

// Pairs CSV rows into latency-model fit samples. w comes from the row's
// (isa, kind) via kernel_shape.
inline std::vector<FitSample> fit_samples_from_rows(const std::vector<BenchRow>& rows) {
    struct Acc {
        std::int64_t m = 0, k = 0;
        int w = 0;
        double conv = 0, ng = 0;
    };
    std::map<std::string, Acc> by_problem;
    for (const BenchRow& r : rows) {
        std::string key = std::to_string(r.m) + "," + std::to_string(r.n) + "," +
                          std::to_string(r.k) + "," + r.kind + "," + r.isa;
        Acc& acc = by_problem[key];
        acc.m = r.m;
        acc.k = r.k;
        ElemKind a_kind = kind_pair_from_name(r.kind).first;
        acc.w = kernel_shape(IsaProfile::of(isa_from_name(r.isa)), a_kind).w;
        if (r.variant == "conventional")
            acc.conv = r.median_ns;
        else if (r.variant == "ngemm")
            acc.ng = r.median_ns;
    }
    std::vector<FitSample> samples;
    for (const auto& [key, acc] : by_problem) {
        if (acc.conv <= 0 || acc.ng <= 0) continue; // unpaired row
        samples.push_back(
            {ProblemPoint::make(acc.m, acc.k, acc.w), acc.conv, acc.ng});
    }
    if (samples.empty()) throw FitError("no paired conventional/ngemm rows in CSV");
    return samples;
}

} // namespace ngemm
