#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ngemm/common.hpp"

namespace ngemm {

// Semantics switch for the u8 x i8 multiply-add family.
//
//   HardwareSaturating: the pairwise i16 sum saturates to [-32768, 32767],
//       exactly as VPMADDUBSW does (255*127*2 = 64770 does not fit i16).
//   WideningExact: the pairwise sum is kept exact in an i32 lane; this is
//       the mathematically exact path used for oracle-equivalence testing.
enum class SatMode { HardwareSaturating, WideningExact };

inline const char* sat_mode_name(SatMode m) {
    return m == SatMode::HardwareSaturating ? "sat" : "exact";
}

namespace detail {

// Pairwise u8*i8 + u8*i8 with i16 saturation. Each individual product fits
// i16 ([-32640, 32385]); only the sum can saturate.
inline std::int16_t madd_pair_u8i8_sat(std::uint8_t a0, std::uint8_t a1,
                                       std::int8_t b0, std::int8_t b1) {
    std::int32_t sum = static_cast<std::int32_t>(a0) * b0 +
                       static_cast<std::int32_t>(a1) * b1;
    return sat_i16(sum);
}

inline std::int32_t madd_pair_u8i8_exact(std::uint8_t a0, std::uint8_t a1,
                                         std::int8_t b0, std::int8_t b1) {
    return static_cast<std::int32_t>(a0) * b0 + static_cast<std::int32_t>(a1) * b1;
}

// Pairwise i16*i16 + i16*i16 into i32. The only representable-range corner
// is (-32768)^2 * 2 = 2^31, which wraps to INT32_MIN just like VPMADDWD.
inline std::int32_t madd_pair_i16(std::int16_t a0, std::int16_t a1,
                                  std::int16_t b0, std::int16_t b1) {
    std::int64_t sum = static_cast<std::int64_t>(a0) * b0 +
                       static_cast<std::int64_t>(a1) * b1;
    return wrap_i32(sum);
}

} // namespace detail

// A fixed-length vector of lanes of one element kind. Lane values are held
// widened in i32, which every supported kind fits.
struct LaneVec {
    ElemKind kind;
    std::vector<std::int32_t> lanes;

    std::size_t size() const { return lanes.size(); }

    static LaneVec of(ElemKind kind, std::vector<std::int32_t> lanes) {
        for (std::int32_t x : lanes)
            if (x < elem_min(kind) || x > elem_max(kind))
                throw RangeError(std::string("LaneVec: ") + std::to_string(x) +
                                 " outside " + elem_name(kind) + " domain");
        return LaneVec{kind, std::move(lanes)};
    }
};

namespace detail {

inline void require_madd_shapes(const LaneVec& a, const LaneVec& b,
                                ElemKind ka, ElemKind kb, const char* op) {
    if (a.kind != ka || b.kind != kb)
        throw ShapeError(std::string(op) + ": operand kinds must be " +
                         elem_name(ka) + " x " + elem_name(kb));
    if (a.size() != b.size())
        throw ShapeError(std::string(op) + ": lane counts differ (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    if (a.size() == 0 || a.size() % 2 != 0)
        throw ShapeError(std::string(op) + ": lane count must be even and nonzero");
}

} // namespace detail

// VPMADDUBSW-style pairwise multiply-add: output lane j combines input
// lanes 2j and 2j+1. i16 output under HardwareSaturating, exact i32 output
// under WideningExact.
inline LaneVec madd_u8i8(const LaneVec& a, const LaneVec& b, SatMode mode) {
    detail::require_madd_shapes(a, b, ElemKind::U8, ElemKind::I8, "madd_u8i8");
    LaneVec out{mode == SatMode::HardwareSaturating ? ElemKind::I16 : ElemKind::I32,
                std::vector<std::int32_t>(a.size() / 2)};
    for (std::size_t j = 0; j < out.lanes.size(); ++j) {
        std::uint8_t a0 = static_cast<std::uint8_t>(a.lanes[2 * j]);
        std::uint8_t a1 = static_cast<std::uint8_t>(a.lanes[2 * j + 1]);
        std::int8_t b0 = static_cast<std::int8_t>(b.lanes[2 * j]);
        std::int8_t b1 = static_cast<std::int8_t>(b.lanes[2 * j + 1]);
        out.lanes[j] = mode == SatMode::HardwareSaturating
                           ? detail::madd_pair_u8i8_sat(a0, a1, b0, b1)
                           : detail::madd_pair_u8i8_exact(a0, a1, b0, b1);
    }
    return out;
}

// VPMADDWD-style pairwise multiply-add of i16 lanes into exact i32 lanes.
// With b = [1,1,...,1] this is the horizontal-reduction step that folds
// adjacent i16 values into i32.
inline LaneVec madd_i16(const LaneVec& a, const LaneVec& b) {
    detail::require_madd_shapes(a, b, ElemKind::I16, ElemKind::I16, "madd_i16");
    LaneVec out{ElemKind::I32, std::vector<std::int32_t>(a.size() / 2)};
    for (std::size_t j = 0; j < out.lanes.size(); ++j)
        out.lanes[j] = detail::madd_pair_i16(
            static_cast<std::int16_t>(a.lanes[2 * j]),
            static_cast<std::int16_t>(a.lanes[2 * j + 1]),
            static_cast<std::int16_t>(b.lanes[2 * j]),
            static_cast<std::int16_t>(b.lanes[2 * j + 1]));
    return out;
}

// Folds adjacent i32 lanes with wrapping addition; the WideningExact stand-in
// for the unit-vector madd_i16 step.
inline LaneVec pairwise_add_i32(const LaneVec& a) {
    if (a.kind != ElemKind::I32)
        throw ShapeError("pairwise_add_i32: operand must be i32");
    if (a.size() == 0 || a.size() % 2 != 0)
        throw ShapeError("pairwise_add_i32: lane count must be even and nonzero");
    LaneVec out{ElemKind::I32, std::vector<std::int32_t>(a.size() / 2)};
    for (std::size_t j = 0; j < out.lanes.size(); ++j)
        out.lanes[j] = wrap_add_i32(a.lanes[2 * j], a.lanes[2 * j + 1]);
    return out;
}

// Lane-wise wrapping i32 add (VPADDD), the phase-2 accumulator step.
inline void add_i32_inplace(LaneVec& acc, const LaneVec& x) {
    if (acc.kind != ElemKind::I32 || x.kind != ElemKind::I32 || acc.size() != x.size())
        throw ShapeError("add_i32_inplace: i32 lane vectors of equal size required");
    for (std::size_t j = 0; j < acc.lanes.size(); ++j)
        acc.lanes[j] = wrap_add_i32(acc.lanes[j], x.lanes[j]);
}

struct TreeReduceResult {
    std::int32_t value = 0;
    int steps = 0;
};

// Sums all i32 lanes by repeated halving (the VPSHFD+VPADDD scheme):
// log2(lanes) wrapping vector adds. The step count feeds the latency model.
inline TreeReduceResult tree_reduce_i32(std::span<const std::int32_t> lanes) {
    if (!is_pow2(static_cast<std::int64_t>(lanes.size())))
        throw ShapeError("tree_reduce_i32: lane count " +
                         std::to_string(lanes.size()) + " is not a power of two");
    std::vector<std::int32_t> work(lanes.begin(), lanes.end());
    int steps = 0;
    for (std::size_t len = work.size(); len > 1; len /= 2) {
        for (std::size_t i = 0; i < len / 2; ++i)
            work[i] = wrap_add_i32(work[i], work[i + len / 2]);
        ++steps;
    }
    return {work[0], steps};
}

inline TreeReduceResult tree_reduce_i32(const LaneVec& v) {
    if (v.kind != ElemKind::I32)
        throw ShapeError("tree_reduce_i32: operand must be i32");
    return tree_reduce_i32(std::span<const std::int32_t>(v.lanes));
}

// Repeats a block of p elements until `total` lanes are filled, preserving
// order: [b0..b_{p-1}, b0..b_{p-1}, ...]. p must divide total.
template <typename T>
std::vector<T> broadcast_block(std::span<const T> block, std::size_t total) {
    if (block.empty() || total % block.size() != 0)
        throw ShapeError("broadcast_block: block length " +
                         std::to_string(block.size()) + " does not divide " +
                         std::to_string(total));
    std::vector<T> out(total);
    for (std::size_t i = 0; i < total; ++i) out[i] = block[i % block.size()];
    return out;
}

inline LaneVec broadcast_block(const LaneVec& b, std::size_t total) {
    std::vector<std::int32_t> lanes =
        broadcast_block(std::span<const std::int32_t>(b.lanes), total);
    return LaneVec{b.kind, std::move(lanes)};
}

} // namespace ngemm
