#pragma once

#include <cstdlib>
#include <cstring>
#include <string>

#include "ngemm/common.hpp"

namespace ngemm {

enum class Isa : std::uint8_t {
    SCALAR = 0, // 128-bit emulation granularity; always available
    V256 = 1,   // AVX2-class, 256-bit vectors
    V512 = 2,   // AVX512BW-class, 512-bit vectors
};

struct IsaProfile {
    Isa name = Isa::SCALAR;
    int vector_bits = 128;

    static IsaProfile scalar() { return {Isa::SCALAR, 128}; }
    static IsaProfile v256() { return {Isa::V256, 256}; }
    static IsaProfile v512() { return {Isa::V512, 512}; }

    static IsaProfile of(Isa isa) {
        switch (isa) {
        case Isa::SCALAR:
            return scalar();
        case Isa::V256:
            return v256();
        case Isa::V512:
            return v512();
        }
        return scalar();
    }
};

inline const char* isa_name(Isa isa) {
    switch (isa) {
    case Isa::SCALAR:
        return "scalar";
    case Isa::V256:
        return "v256";
    case Isa::V512:
        return "v512";
    }
    return "?";
}

inline Isa isa_from_name(const std::string& s) {
    if (s == "scalar") return Isa::SCALAR;
    if (s == "v256") return Isa::V256;
    if (s == "v512") return Isa::V512;
    throw ConfigError("unknown isa \"" + s + "\" (expected scalar|v256|v512)");
}

// Which kernel implementation services a call. Auto resolves to Native when
// the host (as reported by detection / FORCE_ISA) supports the profile.
enum class Engine { Auto, Emulated, Native };

namespace detail {

inline Isa detect_host_isa_uncached() {
    if (const char* force = std::getenv("FORCE_ISA")) {
        // Verbatim override of detection; forcing a level the hardware
        // lacks is the caller's responsibility.
        return isa_from_name(force);
    }
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx512bw") && __builtin_cpu_supports("avx512f"))
        return Isa::V512;
    if (__builtin_cpu_supports("avx2")) return Isa::V256;
#endif
    return Isa::SCALAR;
}

} // namespace detail

// Highest ISA level usable for native kernels, read once at first use.
inline Isa host_isa() {
    static const Isa isa = detail::detect_host_isa_uncached();
    return isa;
}

// True when native SIMD code for `isa` may run on this host. SCALAR is the
// portable emulation profile and never has a native path.
inline bool host_supports_native(Isa isa) {
    if (isa == Isa::SCALAR) return false;
#if defined(__x86_64__) || defined(__i386__)
    Isa h = host_isa();
    if (isa == Isa::V256) return h == Isa::V256 || h == Isa::V512;
    if (isa == Isa::V512) return h == Isa::V512;
#endif
    return false;
}

} // namespace ngemm
