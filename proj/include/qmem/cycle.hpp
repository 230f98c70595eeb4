#pragma once
// End-to-end memory-cycle analysis: response functions, storage overlap
// matrices, retrieval efficiencies and the re-optimized modes of the
// degraded cycle.
//
// Efficiency conventions, with s_i the cycle-kernel eigenvalues and
// Q_ij = quad(stored_i * reference_j) the storage overlap matrix:
//
//   eta_i (fixed modes)  = sum_j Q_ij^2 s_i s_j
//   optimized cycle      = eigenpairs of C_ij = sqrt(s_i s_j) Q_ij
//                          (symmetrized); efficiencies are the squared
//                          eigenvalues
//
// The direct path (write -> storage transform -> read, all by explicit
// quadrature) must agree with the overlap formula; the acceptance suite
// pins that agreement.

#include <vector>

#include "qmem/grid.hpp"
#include "qmem/kernel.hpp"
#include "qmem/response.hpp"
#include "qmem/spectral.hpp"
#include "qmem/storage.hpp"

namespace qmem {

// Spatial response functions r_i(z) = Int dt K(z, t) phi_i(t), split
// into unit shapes and norm factors.  Each measured norm must agree
// with sqrt(s_i) to 1e-2 relative (consistency_error beyond that);
// the achieved worst mismatch is returned via max_norm_mismatch.
ResponseSet response_functions(const SampledKernel& half_write, const ModeSet& modes,
                               double* max_norm_mismatch = nullptr,
                               unsigned workers = 0);

// Overlap matrix between a stored response set and a reference (fresh)
// one: Q_ij = quad(stored_i * reference_j).  Stored shapes are used as
// they are - no renormalization - so norm lost in storage shows up as
// shrunken rows.
struct OverlapMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> q; // row-major

    double at(int i, int j) const {
        return q[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                 static_cast<std::size_t>(j)];
    }
    double row_norm_sq(int i) const;
};

OverlapMatrix overlap_matrix(const ResponseSet& stored, const ResponseSet& reference);

// Retrieved temporal profile of input mode i (0-based) after storage:
// sum_j Q_ij sqrt(s_i s_j) phi_j(t).  truncation_scale reports the size
// of the smallest retained eigenvalue, bounding the dropped tail.
struct OutputProfile {
    SampledFunction profile;
    double truncation_scale;
};

OutputProfile output_profile(int mode_index, const OverlapMatrix& q, const ModeSet& modes);

// Efficiency of mode i through the overlap formula.
double efficiency_overlap(int mode_index, const OverlapMatrix& q, const ModeSet& modes);

// Efficiency of an arbitrary input profile by explicit propagation:
// write quadrature, storage transform, read quadrature, output energy.
// Inputs of non-unit norm are normalized first (with a note to stderr).
double efficiency_direct(const SampledFunction& input, const SampledKernel& half_write,
                         const StorageModel& storage, const SampledKernel& half_read,
                         unsigned workers = 0);

// Eigenpairs of the symmetrized effective kernel of the degraded cycle.
// Eigenvalues are sorted descending and may be negative (the symmetrized
// coefficient matrix need not be positive); efficiencies are their
// squares.  asymmetry_residual records the relative size of the
// discarded antisymmetric part; beyond 0.05 the symmetric reduction is
// questionable and `warned` is set.
struct OptimizedCycle {
    Grid grid;
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> functions;
    double asymmetry_residual = 0.0;
    bool warned = false;

    int count() const { return static_cast<int>(eigenvalues.size()); }
    std::vector<double> efficiencies() const;
};

OptimizedCycle optimized_cycle(const ResponseSet& stored, const ResponseSet& reference,
                               const ModeSet& modes, int max_modes);

} // namespace qmem
