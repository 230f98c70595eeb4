#include "qmem/special.hpp"

#include <cmath>

#include "qmem/errors.hpp"

namespace qmem {
namespace detail {

namespace {

// Build 1 / (4^m (m!)^2) for m = 0..27 once, in exact double steps
// (each coefficient is the previous divided by 4 m^2, so the values are
// correctly rounded at every step).
constexpr auto make_series_coeff() {
    struct Arr { double c[kJ0SeriesTerms]; };
    Arr a{};
    a.c[0] = 1.0;
    for (int m = 1; m < kJ0SeriesTerms; ++m) {
        a.c[m] = a.c[m - 1] / (4.0 * static_cast<double>(m) * static_cast<double>(m));
    }
    return a;
}

constexpr auto kSeries = make_series_coeff();

} // namespace

const double kJ0SeriesCoeff[kJ0SeriesTerms] = {
    kSeries.c[0],  kSeries.c[1],  kSeries.c[2],  kSeries.c[3],  kSeries.c[4],
    kSeries.c[5],  kSeries.c[6],  kSeries.c[7],  kSeries.c[8],  kSeries.c[9],
    kSeries.c[10], kSeries.c[11], kSeries.c[12], kSeries.c[13], kSeries.c[14],
    kSeries.c[15], kSeries.c[16], kSeries.c[17], kSeries.c[18], kSeries.c[19],
    kSeries.c[20], kSeries.c[21], kSeries.c[22], kSeries.c[23], kSeries.c[24],
    kSeries.c[25], kSeries.c[26], kSeries.c[27],
};

// Chebyshev coefficients for the modulus/phase factors of the large-argument
// form, fitted on x in [8, 300] against a 40-digit reference evaluation.
// Max fit error ~1e-18, far below the double rounding floor of the caller.
const double kChebP0[kJ0ChebTerms] = {
    0.99946034934751867,
    -0.00053652204681321174,
    3.0751847875194746e-06,
    -5.1705945376060977e-08,
    1.6306464635151383e-09,
    -7.8640913772370700e-11,
    5.1682623873491925e-12,
    -4.3045788699253912e-13,
    4.3265957431549406e-14,
    -5.0690340959352361e-15,
    6.7480722157338737e-16,
    -1.0011513723467786e-16,
    1.6305919233744185e-17,
};

const double kChebQ0[kJ0ChebTerms] = {
    -0.015555854605337009,
    6.8385199426116496e-05,
    -7.4144984110606473e-07,
    1.7972457247968992e-08,
    -7.2719159368663200e-10,
    4.2201219046687384e-11,
    -3.2067474209966347e-12,
    3.0061451253517063e-13,
    -3.3363281853224270e-14,
    4.2552250402454611e-15,
    -6.0999301316400500e-16,
    9.6621289703032567e-17,
    -1.6686065214378146e-17,
};

double j0_series(double x) {
    const double y = x * x;
    // Horner in y; 28 terms hold the truncation error below 1e-16 for
    // |x| <= 8 (the last term is ~ (16)^27 / (4^27 (27!)^2) ~ 1e-62 * y^27).
    double acc = kJ0SeriesCoeff[kJ0SeriesTerms - 1];
    for (int m = kJ0SeriesTerms - 2; m >= 0; --m) {
        acc = acc * (-y) + kJ0SeriesCoeff[m];
    }
    return acc;
}

namespace {

// Clenshaw recurrence for a Chebyshev sum with the usual half-weight on c0.
inline double clenshaw(const double* c, int n, double u) {
    double b1 = 0.0;
    double b2 = 0.0;
    const double two_u = 2.0 * u;
    for (int k = n - 1; k >= 1; --k) {
        const double b0 = two_u * b1 - b2 + c[k];
        b2 = b1;
        b1 = b0;
    }
    return u * b1 - b2 + c[0];
}

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kQuarterPi = kPi / 4.0;
constexpr double kTwoOverPi = 2.0 / kPi;

} // namespace

double j0_asymptotic(double x) {
    const double r = 8.0 / x;
    const double u = 2.0 * (r * r) - 1.0;
    const double p = clenshaw(kChebP0, kJ0ChebTerms, u);
    const double q = clenshaw(kChebQ0, kJ0ChebTerms, u);
    const double chi = x - kQuarterPi;
    const double amp = std::sqrt(kTwoOverPi / x);
    return amp * (p * std::cos(chi) - r * q * std::sin(chi));
}

} // namespace detail

double bessel_j0(double x) {
    if (!std::isfinite(x)) {
        throw parameter_error("bessel_j0: argument must be finite");
    }
    const double ax = std::fabs(x);
    if (ax <= 8.0) {
        return detail::j0_series(ax);
    }
    return detail::j0_asymptotic(ax);
}

double erf(double x) {
    if (!std::isfinite(x)) {
        throw parameter_error("erf: argument must be finite");
    }
    return std::erf(x);
}

} // namespace qmem
