// AVX2 + FMA backend (x86-64).  This translation unit is the only one
// compiled with -mavx2 -mfma; it must not be entered unless runtime CPU
// detection confirmed both features.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "qmem/simd.hpp"
#include "qmem/special.hpp"

namespace qmem::simd::detail {

namespace {

// Vector Horner evaluation of the J0 power series in y = x^2; valid for
// |x| <= 8 (same coefficients as the scalar path).
inline __m256d j0_series_pd(__m256d ax) {
    using qmem::detail::kJ0SeriesCoeff;
    using qmem::detail::kJ0SeriesTerms;
    const __m256d neg_y = _mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(ax, ax));
    __m256d acc = _mm256_set1_pd(kJ0SeriesCoeff[kJ0SeriesTerms - 1]);
    for (int m = kJ0SeriesTerms - 2; m >= 0; --m) {
        acc = _mm256_fmadd_pd(acc, neg_y, _mm256_set1_pd(kJ0SeriesCoeff[m]));
    }
    return acc;
}

constexpr double kAbsMaskBits = -0.0;

} // namespace

void j0_block_avx2(const double* x, double* out, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(kAbsMaskBits);
    const __m256d eight = _mm256_set1_pd(8.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d ax = _mm256_andnot_pd(sign_mask, v);
        const __m256d in_series = _mm256_cmp_pd(ax, eight, _CMP_LE_OQ);
        if (_mm256_movemask_pd(in_series) == 0xF) {
            _mm256_storeu_pd(out + i, j0_series_pd(ax));
        } else {
            // Mixed or large-argument lanes: defer to the scalar path so
            // the asymptotic branch stays identical across backends.
            j0_block_scalar(x + i, out + i, 4);
        }
    }
    if (i < n) {
        j0_block_scalar(x + i, out + i, n - i);
    }
}

double dot3_avx2(const double* a, const double* b, const double* w, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        const __m256d vw = _mm256_loadu_pd(w + i);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(va, vb), vw, acc);
    }
    // Fixed horizontal reduction order: (l0 + l2) + (l1 + l3), then tail.
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    double sum = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
    for (; i < n; ++i) {
        sum += a[i] * b[i] * w[i];
    }
    return sum;
}

void rot_avx2(double* x, double* y, double c, double s, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xi = _mm256_loadu_pd(x + i);
        const __m256d yi = _mm256_loadu_pd(y + i);
        const __m256d xr = _mm256_fmsub_pd(vc, xi, _mm256_mul_pd(vs, yi));
        const __m256d yr = _mm256_fmadd_pd(vs, xi, _mm256_mul_pd(vc, yi));
        _mm256_storeu_pd(x + i, xr);
        _mm256_storeu_pd(y + i, yr);
    }
    for (; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

} // namespace qmem::simd::detail

#endif // x86-64
