#pragma once
// Schmidt decomposition of the symmetric cycle kernel.
//
// The continuous eigenproblem  Int G(t, t') phi(t') dt' = s phi(t)  is
// discretized with the trapezoidal weights w:  the weighted matrix
// A = diag(sqrt(w)) G diag(sqrt(w)) is symmetric, its eigenvalues are
// the kernel eigenvalues s_i, and the eigenfunctions are recovered as
// phi_i = v_i / sqrt(w).  A is diagonalized by a cyclic Jacobi sweep
// scheme with a fixed rotation order, which keeps the whole
// decomposition bitwise deterministic.
//
// Sign convention: each eigenfunction is flipped, if necessary, so that
// its integral quad(phi) is positive; if the integral vanishes (below
// 1e-12 in magnitude) the first sample larger than 1e-12 in magnitude
// is made positive.

#include <vector>

#include "qmem/grid.hpp"
#include "qmem/kernel.hpp"

namespace qmem {

// An orthonormal family of sampled eigenfunctions with their eigenvalues
// s_i (descending, non-negative).  Orthonormality is with respect to the
// grid quadrature: quad(phi_i phi_j) = delta_ij.
struct ModeSet {
    Grid grid;
    std::vector<double> eigenvalues;              // s_i, descending
    std::vector<std::vector<double>> functions;   // phi_i samples

    ModeSet(Grid g, std::vector<double> s, std::vector<std::vector<double>> f);

    int count() const { return static_cast<int>(eigenvalues.size()); }
};

// Largest orthonormality defect  max_ij |quad(phi_i phi_j) - delta_ij|.
double orthonormality_defect(const ModeSet& modes);

// Leading M eigenpairs of a symmetric sampled kernel.  Requires the
// symmetric flag; throws parameter_error otherwise.  Eigenvalues below
// -1e-9 (relative to the largest) raise consistency_error, tiny negative
// rounding is clamped to zero.  The residual ||G phi - s phi|| of every
// retained pair is checked against 1e-6 * s_1.
ModeSet schmidt_decompose(const SampledKernel& kernel, int max_modes,
                          unsigned workers = 0);

// Sum of the retained rank-one terms  sum_i s_i phi_i(t) phi_i(t').
SampledKernel reconstruct_kernel(const ModeSet& modes);

// Relative Frobenius residual of the reconstruction against a reference
// kernel on the same grids.
double reconstruction_residual(const ModeSet& modes, const SampledKernel& reference);

// Time-compressed retrieval modes: given write-interval modes phi_i on
// [0, T_w] and the compression ratio k = T_w / T_r, returns
// sqrt(k) * phi_i(k t) sampled on [0, T_r]; orthonormality is preserved.
ModeSet scaled_retrieval_modes(const ModeSet& modes, double k);

// Expansion coefficients c_i = quad(f phi_i) of a sampled signal in the
// mode basis.  The signal must live on the modes' grid.
std::vector<double> project(const SampledFunction& f, const ModeSet& modes);

namespace detail {
// Cyclic Jacobi diagonalization of a symmetric matrix held row-major in
// `a`.  On return the diagonal of `a` carries the eigenvalues and the
// rows of `vt` (preinitialized to identity by the caller being absent -
// this function initializes it) the corresponding eigenvectors.  Fixed
// rotation order; bitwise deterministic.  Throws consistency_error when
// the sweep limit is hit.
void jacobi_symmetric(std::vector<double>& a, std::vector<double>& vt, int n);

// Deterministic sign convention shared by all mode constructions.
void fix_mode_sign(const Grid& grid, std::vector<double>& phi);
} // namespace detail

} // namespace qmem
