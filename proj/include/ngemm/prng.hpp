#pragma once

#include <cstdint>

#include "ngemm/common.hpp"

namespace ngemm {

// xorshift64* generator, seeded through one splitmix64 step so that any
// 64-bit seed (including 0) yields a valid nonzero state. Golden tests
// depend on this exact sequence, so it must stay platform-independent;
// never swap it for a standard-library engine.
class XorShift64Star {
public:
    explicit XorShift64Star(std::uint64_t seed) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        state_ = z ^ (z >> 31);
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
    }

    std::uint64_t next() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    // Uniform draw from [lo, hi]. Plain modulo mapping: bias is immaterial
    // for test-data generation and keeps the sequence trivially portable.
    std::int64_t next_in(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw RangeError("next_in: lo > hi");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next()); // full 64-bit range
        return lo + static_cast<std::int64_t>(next() % span);
    }

private:
    std::uint64_t state_;
};

} // namespace ngemm
