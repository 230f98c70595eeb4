#pragma once
// Half-cycle and full-cycle response kernels.
//
// The half-cycle kernel on a medium of scaled length L and stage duration
// T is the oscillatory Bessel convolution
//
//   K(z, t) = (1/sqrt(2)) Re  Int_0^t  e^{i (t - 2 t')}
//                              J0( sqrt(z t') ) J0( sqrt(z (t - t')) )  dt'
//
// evaluated on a uniform space-time grid.  The imaginary part vanishes
// identically (the integrand is odd about t' = t/2), which the builder
// verifies as a numerical self-check on every entry.
//
// A full memory cycle composes a write stage with a read stage; with the
// stages sharing the spatial grid the cycle kernel is
//
//   G(t, t') = Int_0^L  K_w(z, t) K_r(z, t')  dz,
//
// symmetric whenever the two stage durations agree.  Unequal durations
// are handled by reading the rectangular kernel on a common square
// domain (t' -> t'/k with k = T_w / T_r) and splitting off the exactly
// symmetric part; the discarded antisymmetric remainder is reported so
// callers can judge whether the symmetric reduction was appropriate.

#include <string>
#include <vector>

#include "qmem/grid.hpp"

namespace qmem {

// Physical and discretization parameters for one memory cycle.
struct CycleParams {
    double length = 10.0;         // optical depth L of the ensemble
    double write_duration = 5.5;  // scaled duration of the write stage
    double read_duration = 5.5;   // scaled duration of the read stage
    int nz = 512;                 // spatial grid nodes
    int nt = 512;                 // temporal grid nodes
    int inner_n = 0;              // nodes of the inner t' quadrature (0: use nt)

    int effective_inner() const { return inner_n > 0 ? inner_n : nt; }
};

// Throws parameter_error on invalid values (non-positive sizes or
// non-finite/non-positive physical parameters).  Durations at or above
// the medium length are *valid* but outside the model's regime; see
// validity_warning().
void validate(const CycleParams& params);

// True when either stage duration reaches the medium length; the
// underlying single-pass model assumes T < L.
bool out_of_model(const CycleParams& params);

// Human-readable out-of-model warning, empty when the regime is fine.
std::string validity_warning(const CycleParams& params);

enum class Stage { kWrite, kRead };

// Dense kernel samples on a (row grid) x (column grid) lattice,
// row-major.  `symmetric` records whether the matrix was measured (or
// constructed) to be symmetric; decompositions require it.
struct SampledKernel {
    Grid row_grid;
    Grid col_grid;
    std::vector<double> values; // row-major, rows * cols entries
    bool symmetric = false;

    SampledKernel(Grid rows, Grid cols, std::vector<double> vals, bool sym);

    int rows() const { return row_grid.size(); }
    int cols() const { return col_grid.size(); }
    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) +
                      static_cast<std::size_t>(j)];
    }
    const double* row(int i) const {
        return values.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols());
    }
    double max_abs() const;
};

// Single-point evaluation of the half-cycle kernel with inner_n nodes of
// the t' quadrature.  Also computes the (analytically zero) imaginary
// part and throws consistency_error if it fails to cancel to
// |Im| <= 1e-9 * (1 + |Re|).
double half_kernel_point(double z, double t, int inner_n);

// Full half-cycle kernel: rows over z in [0, L], columns over t in
// [0, T_stage].  The t = 0 column is identically zero.  Columns are
// computed independently, so any worker count yields identical bytes.
SampledKernel build_half_kernel(const CycleParams& params, Stage stage,
                                unsigned workers = 0);

// Compose two half kernels (sharing their spatial grid) into the cycle
// kernel G(t, t') = Int dz K_w(z, t) K_r(z, t').  The symmetric flag is
// set from a measured asymmetry below 1e-10 relative.
SampledKernel build_cycle_kernel(const SampledKernel& write_kernel,
                                 const SampledKernel& read_kernel,
                                 unsigned workers = 0);

// Result of reducing an unequal-duration cycle to a symmetric kernel on
// [0, T_w]^2: the symmetrized kernel, the compression ratio k = T_w/T_r,
// and the relative magnitude of the discarded antisymmetric part.
struct SymmetrizedCycle {
    SampledKernel kernel;
    double k;
    double asymmetry_residual;
};

SymmetrizedCycle symmetrize_asymmetric(const CycleParams& params,
                                       unsigned workers = 0);

} // namespace qmem
