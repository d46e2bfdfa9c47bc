#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ngemm/common.hpp"

namespace ngemm {

// Constants of the analytical cost model:
//   c1 - cost of one tree-reduction halving step,
//   c2 - cost of one vector step (multiply-add + accumulate over one
//        w-element chunk of K),
//   c3 = c1 / c2.
// Units are whatever the timings carry (nanoseconds in this artifact);
// the model only ever uses them in ratios or against like-unit values.
struct CostParams {
    double c1 = 0;
    double c2 = 0;
    double c3 = 0;

    static CostParams make(double c1, double c2) {
        if (!(c1 > 0) || !(c2 > 0))
            throw RangeError("CostParams: c1 and c2 must be positive");
        return {c1, c2, c1 / c2};
    }
};

// One problem point: the M extent plus the reduction length l = ceil(K/w) in
// vector steps. A non-divisible K still costs a full (padded) step.
struct ProblemPoint {
    std::int64_t m = 0;
    std::int64_t k = 0;
    int w = 0;
    std::int64_t l = 0;

    static ProblemPoint make(std::int64_t m, std::int64_t k, int w) {
        if (m < 1 || k < 1 || w < 1)
            throw RangeError("ProblemPoint: m, k, w must be >= 1");
        return {m, k, w, (k + w - 1) / w};
    }
};

// M * (l*c2 + c1*log2(w)): per output element, l vector steps plus one
// tree reduction of log2(w) halvings. The model tracks one output column;
// the N sweep is common to both kernels and cancels in the ratio.
inline double latency_conventional(const ProblemPoint& p, const CostParams& c) {
    return static_cast<double>(p.m) *
           (static_cast<double>(p.l) * c.c2 + c.c1 * std::log2(static_cast<double>(p.w)));
}

// M * l * c2: the broadcast kernel has no reduction term.
inline double latency_ngemm(const ProblemPoint& p, const CostParams& c) {
    return static_cast<double>(p.m) * static_cast<double>(p.l) * c.c2;
}

// 1 + c3 * log2(w) / l, the closed-form ratio; identical to
// latency_conventional / latency_ngemm.
inline double speedup_ratio(const ProblemPoint& p, const CostParams& c) {
    return 1.0 + c.c3 * std::log2(static_cast<double>(p.w)) /
                     static_cast<double>(p.l);
}

// One measured point for constant fitting.
struct FitSample {
    ProblemPoint point;
    double t_conventional = 0;
    double t_ngemm = 0;
};

struct FitResult {
    CostParams params;
    double r2_ngemm = 0;  // fit of t_ngemm = c2 * (M*l)
    double r2_conv = 0;   // fit of t_conv = c2 * (M*l) + c1 * (M*log2 w)
    // Free-slope fit of the conventional timings, reported because the model
    // asserts the two kernels share one c2; real measurements may disagree.
    double c2_conv = 0;
    double c2_discrepancy = 0; // |c2_conv - c2| / c2
};

namespace detail {

inline double r_squared(std::span<const double> y, std::span<const double> yhat) {
    double mean = 0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0) return ss_res == 0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

} // namespace detail

// Least-squares recovery of (c1, c2) from paired kernel timings: c2 is the
// through-origin slope of t_ngemm against M*l, and c1 the through-origin
// slope of the conventional residual against M*log2(w).
inline FitResult fit_constants(std::span<const FitSample> samples) {
    if (samples.size() < 2)
        throw FitError("fit_constants: need at least 2 samples");
    bool distinct_l = false;
    for (const FitSample& s : samples)
        if (s.point.l != samples.front().point.l) distinct_l = true;
    if (!distinct_l)
        throw FitError("fit_constants: all samples share one reduction length l");

    const std::size_t ns = samples.size();
    std::vector<double> x(ns), z(ns), y_ng(ns), y_cv(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        x[i] = static_cast<double>(samples[i].point.m) *
               static_cast<double>(samples[i].point.l);
        z[i] = static_cast<double>(samples[i].point.m) *
               std::log2(static_cast<double>(samples[i].point.w));
        y_ng[i] = samples[i].t_ngemm;
        y_cv[i] = samples[i].t_conventional;
    }

    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ns; ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y_ng[i];
    }
    double c2 = sxy / sxx;

    double szz = 0, szr = 0;
    for (std::size_t i = 0; i < ns; ++i) {
        double r = y_cv[i] - c2 * x[i];
        szz += z[i] * z[i];
        szr += z[i] * r;
    }
    double c1 = szr / szz;
    if (!(c1 > 0) || !(c2 > 0))
        throw FitError("fit_constants: fitted constants are not positive "
                       "(measured data contradicts the model)");

    FitResult out;
    out.params = CostParams::make(c1, c2);

    std::vector<double> yhat(ns);
    for (std::size_t i = 0; i < ns; ++i) yhat[i] = c2 * x[i];
    out.r2_ngemm = detail::r_squared(y_ng, yhat);
    for (std::size_t i = 0; i < ns; ++i) yhat[i] = c2 * x[i] + c1 * z[i];
    out.r2_conv = detail::r_squared(y_cv, yhat);

    // Joint free fit (normal equations) of the conventional timings, to
    // surface how far its own slope sits from the ngemm-derived c2.
    double sxz = 0, sxy_cv = 0, szy_cv = 0;
    for (std::size_t i = 0; i < ns; ++i) {
        sxz += x[i] * z[i];
        sxy_cv += x[i] * y_cv[i];
        szy_cv += z[i] * y_cv[i];
    }
    double det = sxx * szz - sxz * sxz;
    if (det != 0) {
        out.c2_conv = (sxy_cv * szz - szy_cv * sxz) / det;
        out.c2_discrepancy = std::abs(out.c2_conv - c2) / c2;
    } else {
        out.c2_conv = c2;
        out.c2_discrepancy = 0;
    }
    return out;
}

} // namespace ngemm
