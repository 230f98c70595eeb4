// Runtime backend selection.  Detection happens once; tests can pin a
// backend explicitly to compare implementations against each other.

#include "qmem/simd.hpp"

#include "qmem/errors.hpp"

namespace qmem::simd {

namespace {

struct Vtable {
    void (*j0_block)(const double*, double*, std::size_t);
    double (*dot3)(const double*, const double*, const double*, std::size_t);
    void (*rot)(double*, double*, double, double, std::size_t);
    Backend id;
    const char* name;
};

constexpr Vtable kScalarTable{
    &detail::j0_block_scalar, &detail::dot3_scalar, &detail::rot_scalar,
    Backend::kScalar, "scalar"};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Vtable kAvx2Table{
    &detail::j0_block_avx2, &detail::dot3_avx2, &detail::rot_avx2,
    Backend::kAvx2, "avx2"};

bool cpu_has_avx2_fma() {
#if defined(__GNUC__) || defined(__clang__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

#if defined(__aarch64__)
constexpr Vtable kNeonTable{
    &detail::j0_block_neon, &detail::dot3_neon, &detail::rot_neon,
    Backend::kNeon, "neon"};
#endif

const Vtable* detect_best() {
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2_fma()) return &kAvx2Table;
#endif
#if defined(__aarch64__)
    return &kNeonTable;
#endif
    return &kScalarTable;
}

const Vtable* g_active = nullptr;

const Vtable* active() {
    if (g_active == nullptr) {
        g_active = detect_best();
    }
    return g_active;
}

} // namespace

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::kAuto:
        case Backend::kScalar:
            return true;
        case Backend::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
            return cpu_has_avx2_fma();
#else
            return false;
#endif
        case Backend::kNeon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

void force_backend(Backend b) {
    if (!backend_supported(b)) {
        throw parameter_error("force_backend: requested backend not supported on this CPU");
    }
    switch (b) {
        case Backend::kAuto:
            g_active = detect_best();
            break;
        case Backend::kScalar:
            g_active = &kScalarTable;
            break;
        case Backend::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
            g_active = &kAvx2Table;
#endif
            break;
        case Backend::kNeon:
#if defined(__aarch64__)
            g_active = &kNeonTable;
#endif
            break;
    }
}

Backend active_backend() { return active()->id; }

const char* backend_name() { return active()->name; }

void j0_block(const double* x, double* out, std::size_t n) {
    active()->j0_block(x, out, n);
}

double dot3(const double* a, const double* b, const double* w, std::size_t n) {
    return active()->dot3(a, b, w, n);
}

void rot(double* x, double* y, double c, double s, std::size_t n) {
    active()->rot(x, y, c, s, n);
}

} // namespace qmem::simd
