// NEON backend (aarch64).  Kept deliberately conservative: two-lane
// arithmetic with the same block structure as the AVX2 path, falling
// back to the scalar routines for mixed-range Bessel blocks.

#if defined(__aarch64__)

#include <arm_neon.h>

#include "qmem/simd.hpp"
#include "qmem/special.hpp"

namespace qmem::simd::detail {

namespace {

inline float64x2_t j0_series_f64x2(float64x2_t ax) {
    using qmem::detail::kJ0SeriesCoeff;
    using qmem::detail::kJ0SeriesTerms;
    const float64x2_t neg_y = vnegq_f64(vmulq_f64(ax, ax));
    float64x2_t acc = vdupq_n_f64(kJ0SeriesCoeff[kJ0SeriesTerms - 1]);
    for (int m = kJ0SeriesTerms - 2; m >= 0; --m) {
        acc = vfmaq_f64(vdupq_n_f64(kJ0SeriesCoeff[m]), acc, neg_y);
    }
    return acc;
}

} // namespace

void j0_block_neon(const double* x, double* out, std::size_t n) {
    const float64x2_t eight = vdupq_n_f64(8.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vld1q_f64(x + i);
        const float64x2_t ax = vabsq_f64(v);
        const uint64x2_t in_series = vcleq_f64(ax, eight);
        if (vgetq_lane_u64(in_series, 0) && vgetq_lane_u64(in_series, 1)) {
            vst1q_f64(out + i, j0_series_f64x2(ax));
        } else {
            j0_block_scalar(x + i, out + i, 2);
        }
    }
    if (i < n) {
        j0_block_scalar(x + i, out + i, n - i);
    }
}

double dot3_neon(const double* a, const double* b, const double* w, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t va = vld1q_f64(a + i);
        const float64x2_t vb = vld1q_f64(b + i);
        const float64x2_t vw = vld1q_f64(w + i);
        acc = vfmaq_f64(acc, vmulq_f64(va, vb), vw);
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) {
        sum += a[i] * b[i] * w[i];
    }
    return sum;
}

void rot_neon(double* x, double* y, double c, double s, std::size_t n) {
    const float64x2_t vc = vdupq_n_f64(c);
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t xi = vld1q_f64(x + i);
        const float64x2_t yi = vld1q_f64(y + i);
        const float64x2_t xr = vfmsq_f64(vmulq_f64(vc, xi), vs, yi);
        const float64x2_t yr = vfmaq_f64(vmulq_f64(vc, yi), vs, xi);
        vst1q_f64(x + i, xr);
        vst1q_f64(y + i, yr);
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

} // namespace qmem::simd::detail

#endif // aarch64
