// Portable reference backend.  These loops define the semantics the
// vector backends must reproduce (up to bounded reassociation error).

#include "qmem/simd.hpp"
#include "qmem/special.hpp"

namespace qmem::simd::detail {

void j0_block_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double ax = x[i] < 0.0 ? -x[i] : x[i];
        out[i] = (ax <= 8.0) ? qmem::detail::j0_series(ax)
                             : qmem::detail::j0_asymptotic(ax);
    }
}

double dot3_scalar(const double* a, const double* b, const double* w, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i] * w[i];
    }
    return acc;
}

void rot_scalar(double* x, double* y, double c, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

} // namespace qmem::simd::detail
