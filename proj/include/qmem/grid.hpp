#pragma once
// Uniform 1-D grids, sampled functions, trapezoidal quadrature and the
// handful of interpolation/inversion helpers the rest of the library
// builds on.  Everything here is deliberately simple: fixed summation
// order, no hidden state, bitwise-reproducible results.

#include <cstddef>
#include <vector>

#include "qmem/errors.hpp"

namespace qmem {

// Uniform grid on [start, end] with n nodes and trapezoidal weights
// (h at interior nodes, h/2 at the two ends, so the weights sum to the
// interval length exactly up to rounding).
class Grid {
public:
    Grid(double start, double end, int n);

    double start() const { return start_; }
    double end() const { return end_; }
    int size() const { return n_; }
    double spacing() const { return h_; }
    double length() const { return end_ - start_; }

    double point(int i) const { return points_[static_cast<std::size_t>(i)]; }
    double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }

    bool operator==(const Grid& other) const {
        return start_ == other.start_ && end_ == other.end_ && n_ == other.n_;
    }
    bool operator!=(const Grid& other) const { return !(*this == other); }

private:
    double start_;
    double end_;
    int n_;
    double h_;
    std::vector<double> points_;
    std::vector<double> weights_;
};

// A real-valued function sampled on a Grid.  Values are validated to be
// finite on construction.
struct SampledFunction {
    Grid grid;
    std::vector<double> values;

    SampledFunction(Grid g, std::vector<double> v);

    int size() const { return grid.size(); }
};

// Trapezoidal quadrature: sum_i w_i v_i, accumulated left to right.
double quad(const Grid& grid, const std::vector<double>& values);
double quad(const SampledFunction& f);

// Pointwise product integral: sum_i w_i a_i b_i.
double quad_product(const Grid& grid, const std::vector<double>& a,
                    const std::vector<double>& b);

// Linear interpolation at x, which must lie inside [start, end]
// (a small rounding slop is tolerated at the ends); throws range_error
// otherwise.
double eval_linear(const SampledFunction& f, double x);

// Linear interpolation extended by zero outside the grid.
double eval_linear_zero(const SampledFunction& f, double x);

// Invert a strictly increasing sampled function by bisection on the
// interpolant: returns x with f(x) = y to within 1e-10 * (end - start).
// Non-monotone samples are a parameter_error; y outside the sampled
// value range is a range_error.
double invert_monotone(const SampledFunction& f, double y);

// L2 norm under the grid weights: sqrt(quad(v * v)).
double weighted_norm(const Grid& grid, const std::vector<double>& values);

} // namespace qmem
