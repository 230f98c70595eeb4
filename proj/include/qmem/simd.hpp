#pragma once
// Vectorized inner-loop primitives with runtime backend selection.
//
// Three primitives carry essentially all the floating-point work of the
// library:
//   j0_block  - elementwise Bessel J0 over a contiguous array
//   dot3      - sum_i a_i * b_i * w_i   (weighted dot product)
//   rot       - in-place plane rotation of two rows (Jacobi sweeps)
//
// Each has a scalar reference implementation and, where the hardware
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant compiled
// in a separate translation unit.  The active backend is chosen once at
// startup from CPU feature detection and can be forced (e.g. by the
// equivalence tests) through force_backend().
//
// Determinism contract: for a fixed backend the primitives are pure and
// bitwise reproducible; different backends may differ by reassociation
// at the level of a few ULPs, which the tests bound explicitly.

#include <cstddef>

namespace qmem::simd {

enum class Backend {
    kAuto,   // pick the best supported backend (default)
    kScalar, // portable reference implementation
    kAvx2,   // x86-64 AVX2 + FMA
    kNeon,   // aarch64 Advanced SIMD
};

// Force a specific backend.  Backend::kAuto restores CPU detection.
// Throws parameter_error if the requested backend is not supported on
// this machine.  Not thread-safe; call before launching workers.
void force_backend(Backend b);

Backend active_backend();
const char* backend_name();
bool backend_supported(Backend b);

// out[i] = J0(x[i]) for i < n.  Arguments must be finite.
void j0_block(const double* x, double* out, std::size_t n);

// Returns sum_i a[i] * b[i] * w[i], fixed accumulation order per backend.
double dot3(const double* a, const double* b, const double* w, std::size_t n);

// Plane rotation: (x_i, y_i) <- (c x_i - s y_i, s x_i + c y_i).
void rot(double* x, double* y, double c, double s, std::size_t n);

namespace detail {
// Per-backend entry points (exposed for the equivalence tests).
void j0_block_scalar(const double* x, double* out, std::size_t n);
double dot3_scalar(const double* a, const double* b, const double* w, std::size_t n);
void rot_scalar(double* x, double* y, double c, double s, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
void j0_block_avx2(const double* x, double* out, std::size_t n);
double dot3_avx2(const double* a, const double* b, const double* w, std::size_t n);
void rot_avx2(double* x, double* y, double c, double s, std::size_t n);
#endif

#if defined(__aarch64__)
void j0_block_neon(const double* x, double* out, std::size_t n);
double dot3_neon(const double* a, const double* b, const double* w, std::size_t n);
void rot_neon(double* x, double* y, double c, double s, std::size_t n);
#endif
} // namespace detail

} // namespace qmem::simd
