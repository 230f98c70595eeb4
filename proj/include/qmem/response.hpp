#pragma once
// Spatial response functions of the memory: for each temporal eigenmode
// phi_i the write stage excites a spatial profile r_i(z); its L2
// normalization sqrt(quad(r_i^2)) equals sqrt(s_i), so the set is kept
// as unit-norm shapes psi_i plus the measured norm factors.
//
// Storage transformations (thermal blur, density rescaling, mixing) act
// on the unit shapes and leave the norm factors untouched; overlap and
// efficiency calculations recombine the two.  Shapes that have been
// through storage are deliberately NOT renormalized - their norm loss
// carries physical meaning.

#include <vector>

#include "qmem/grid.hpp"

namespace qmem {

struct ResponseSet {
    Grid grid;                                   // spatial grid the shapes live on
    std::vector<std::vector<double>> unit_modes; // psi_i samples (unit norm at birth)
    std::vector<double> norm_factors;            // measured sqrt(s_i) per mode

    ResponseSet(Grid g, std::vector<std::vector<double>> shapes,
                std::vector<double> norms);

    int count() const { return static_cast<int>(unit_modes.size()); }
};

} // namespace qmem
