#pragma once
// Special functions used by the kernel builder and the storage model.
//
// bessel_j0 is implemented in two pieces:
//   |x| <= 8 : the ascending power series in y = x^2, summed by Horner's
//              rule with precomputed coefficients 1 / (4^m (m!)^2).
//   |x| >  8 : the Hankel-style form
//                  J0(x) = sqrt(2/(pi x)) [ P0(u) cos(chi) - (8/x) Q0(u) sin(chi) ],
//              chi = x - pi/4, u = 2 (8/x)^2 - 1, with P0 and Q0 evaluated
//              as Chebyshev expansions fitted to better than 1e-18 on
//              x in [8, 300].
// The absolute error stays below 1e-12 across |x| <= 50 (dominated by
// cancellation inside the series near the crossover).

#include <cstddef>

namespace qmem {

// Bessel function of the first kind, order zero.  Non-finite input is a
// parameter_error.
double bessel_j0(double x);

// Error function wrapper (finite-input checked); matches std::erf.
double erf(double x);

namespace detail {
// Series evaluation kept visible so block (SIMD) code can share the
// coefficients and tests can probe the crossover behaviour directly.
inline constexpr int kJ0SeriesTerms = 28; // highest power y^27
extern const double kJ0SeriesCoeff[kJ0SeriesTerms];

inline constexpr int kJ0ChebTerms = 13;
extern const double kChebP0[kJ0ChebTerms];
extern const double kChebQ0[kJ0ChebTerms];

double j0_series(double x);    // valid for |x| <= 8
double j0_asymptotic(double x); // valid for x > 8
} // namespace detail

} // namespace qmem
