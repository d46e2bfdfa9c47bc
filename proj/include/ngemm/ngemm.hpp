#pragma once

// Umbrella header for the low-precision integer GEMM toolkit.

#include "ngemm/bench.hpp"
#include "ngemm/common.hpp"
#include "ngemm/gemm.hpp"
#include "ngemm/isa.hpp"
#include "ngemm/lanes.hpp"
#include "ngemm/latency_model.hpp"
#include "ngemm/layout.hpp"
#include "ngemm/matrix.hpp"
#include "ngemm/prng.hpp"
#include "ngemm/simd_native.hpp"
#include "ngemm/tuner.hpp"
