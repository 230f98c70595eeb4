#pragma once
// Storage-interval physics: what thermal motion of the atoms does to the
// spatial response functions between the write and read stages.
//
// Free ballistic expansion over the storage time displaces each atom by
// a Gaussian with spread DeltaL (in optical-depth units), so a stored
// profile is convolved with a Gaussian of standard deviation
// sigma = DeltaL / sqrt(2) (the relative-coordinate width).  Coherence
// leaving the original column [0, L] is retained on an extended grid;
// only the read stage, which sees optical depth, clips it.
//
// The read stage addresses the medium through its *density*: after
// expansion the concentration profile N(z) is no longer a box, and a
// coordinate along the column measured in optical depth relates to the
// lab coordinate through the scaling map f(z) = Int_-inf^z N / Nbar.
// Profiles are therefore resampled as psi(f^{-1}(zbar)) before the read
// kernel is applied (a density-weighted variant dividing by
// sqrt(f'(f^{-1})) is available behind a flag).
//
// The opposite limit - storage long enough for complete spatial mixing -
// flattens every stored profile to a constant; the excitation-preserving
// convention keeps its L2 norm at unity (an amplitude-preserving variant
// keeps the mean instead).

#include <vector>

#include "qmem/grid.hpp"
#include "qmem/response.hpp"

namespace qmem {

// How profiles are pulled back through the scaling map.
enum class Transform {
    kScalar,  // psi(f^{-1}(zbar))                    (default)
    kDensity, // psi(f^{-1}(zbar)) / sqrt(f'(f^{-1})) (change-of-variables weight)
};

// Normalization convention for full mixing.
enum class MixNorm {
    kExcitation, // unit shapes stay unit norm: 1/sqrt(L)
    kAmplitude,  // shapes keep their mean value
};

// Storage model selected for a run.
struct StorageModel {
    enum class Kind { kNone, kFreeExpansion, kFullMixing };
    Kind kind = Kind::kNone;
    double delta_l = 0.0;                       // RMS single-atom displacement
    Transform transform = Transform::kScalar;
    MixNorm mix_norm = MixNorm::kExcitation;
};

void validate(const StorageModel& model);

// Grid on which blurred profiles live: the source grid extended by whole
// cells to cover at least 4 DeltaL of Gaussian tail on each side.
// Keeping the original nodes as a subset makes the DeltaL -> 0 limit an
// exact identity on [0, L].
Grid extended_grid(const Grid& source, double delta_l);

// Convolve a profile on [0, L] (zero outside) with the displacement
// Gaussian; the result lives on extended_grid(source, delta_l).  The
// convolution of the piecewise-linear interpolant is evaluated in closed
// form (erf/exp), so the amplitude integral is preserved to rounding.
SampledFunction blur_free_expansion(const SampledFunction& profile, double delta_l);

// Post-expansion concentration profile of an initially uniform column:
// N(z) = N0/2 [erf(z / DeltaL) + erf((L - z) / DeltaL)], sampled on the
// extended grid and normalized so the total mass equals L exactly.
SampledFunction blurred_concentration(double length, double delta_l, int n);

// Optical-depth coordinate map built from a concentration profile:
// f = cumulative trapezoid of N, renormalized to end exactly at the
// total mass (= L for blurred_concentration).  Strictly increasing.
struct ScalingMap {
    SampledFunction f;             // optical depth as a function of lab z
    SampledFunction concentration; // N / Nbar, the derivative of f
};

ScalingMap scaling_map(const SampledFunction& concentration);

// Pull a blurred (extended-grid) profile back to the optical-depth
// coordinate on `target` (normally the original [0, L] grid).
SampledFunction rescale_to_optical_depth(const SampledFunction& blurred,
                                         const ScalingMap& map, Transform transform,
                                         const Grid& target);

// Full free-expansion pipeline for a response set: blur every unit
// shape, rebuild the scaling map for this delta_l, rescale back onto the
// original grid.  Norm factors pass through unchanged; shape norms may
// shrink (that loss *is* the storage decay).
ResponseSet store_free_expansion(const ResponseSet& responses, double delta_l,
                                 Transform transform);

// Complete spatial mixing: every unit shape becomes the flat profile.
ResponseSet mix_uniform(const ResponseSet& responses, MixNorm norm);

// Single-profile mixing used by the direct-efficiency path: maps an
// arbitrary stored amplitude b(z) to a constant, either ||b|| / sqrt(L)
// (excitation-preserving) or quad(b) / L (amplitude-preserving).
SampledFunction mix_uniform_profile(const SampledFunction& profile, MixNorm norm);

// Dispatch on the storage model; kNone returns the input unchanged.
ResponseSet apply_storage(const ResponseSet& responses, const StorageModel& model);

// Classicality estimate for the ensemble: ratio of the temperature to
// the quantum-degeneracy scale  n^(2/3) h^2 / (3 m k_B).  The motional
// state is treated as classical when the ratio passes 100 (two orders
// of magnitude above degeneracy).
struct ClassicalityResult {
    double ratio;
    double degeneracy_temperature; // kelvin
    bool classical;
};

ClassicalityResult classicality_check(double temperature_kelvin,
                                      double concentration_per_m3, double mass_kg);

} // namespace qmem
