#include "qmem/grid.hpp"

#include <cmath>
#include <string>

namespace qmem {

Grid::Grid(double start, double end, int n) : start_(start), end_(end), n_(n) {
    if (!std::isfinite(start) || !std::isfinite(end)) {
        throw parameter_error("Grid: endpoints must be finite");
    }
    if (!(end > start)) {
        throw parameter_error("Grid: end must exceed start");
    }
    if (n < 2) {
        throw parameter_error("Grid: need at least two nodes, got " + std::to_string(n));
    }
    h_ = (end - start) / static_cast<double>(n - 1);
    points_.resize(static_cast<std::size_t>(n));
    weights_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Affine blend keeps the last node exactly at `end`.
        const double u = static_cast<double>(i) / static_cast<double>(n - 1);
        points_[static_cast<std::size_t>(i)] = start * (1.0 - u) + end * u;
        weights_[static_cast<std::size_t>(i)] = h_;
    }
    points_.front() = start;
    points_.back() = end;
    weights_.front() = 0.5 * h_;
    weights_.back() = 0.5 * h_;
}

SampledFunction::SampledFunction(Grid g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.size()) {
        throw parameter_error("SampledFunction: value count does not match grid size");
    }
    for (double x : values) {
        if (!std::isfinite(x)) {
            throw parameter_error("SampledFunction: values must be finite");
        }
    }
}

double quad(const Grid& grid, const std::vector<double>& values) {
    if (static_cast<int>(values.size()) != grid.size()) {
        throw parameter_error("quad: value count does not match grid size");
    }
    const std::vector<double>& w = grid.weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += w[i] * values[i];
    }
    return acc;
}

double quad(const SampledFunction& f) { return quad(f.grid, f.values); }

double quad_product(const Grid& grid, const std::vector<double>& a,
                    const std::vector<double>& b) {
    if (static_cast<int>(a.size()) != grid.size() ||
        static_cast<int>(b.size()) != grid.size()) {
        throw parameter_error("quad_product: value count does not match grid size");
    }
    const std::vector<double>& w = grid.weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += w[i] * a[i] * b[i];
    }
    return acc;
}

namespace {

// Shared linear-interpolation core; assumes x already clamped into range.
double interp_core(const SampledFunction& f, double x) {
    const Grid& g = f.grid;
    const double h = g.spacing();
    int k = static_cast<int>(std::floor((x - g.start()) / h));
    if (k < 0) k = 0;
    if (k > g.size() - 2) k = g.size() - 2;
    const double x0 = g.point(k);
    const double u = (x - x0) / h;
    const std::size_t sk = static_cast<std::size_t>(k);
    return f.values[sk] * (1.0 - u) + f.values[sk + 1] * u;
}

} // namespace

double eval_linear(const SampledFunction& f, double x) {
    const Grid& g = f.grid;
    // Tolerate a hair of rounding at the endpoints, reject real excursions.
    const double slop = 1e-12 * g.length();
    if (x < g.start() - slop || x > g.end() + slop) {
        throw range_error("eval_linear: x = " + std::to_string(x) +
                          " outside sampled domain [" + std::to_string(g.start()) +
                          ", " + std::to_string(g.end()) + "]");
    }
    if (x < g.start()) x = g.start();
    if (x > g.end()) x = g.end();
    return interp_core(f, x);
}

double eval_linear_zero(const SampledFunction& f, double x) {
    const Grid& g = f.grid;
    if (x < g.start() || x > g.end()) return 0.0;
    return interp_core(f, x);
}

double invert_monotone(const SampledFunction& f, double y) {
    const std::vector<double>& v = f.values;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (!(v[i + 1] > v[i])) {
            throw parameter_error("invert_monotone: samples are not strictly increasing");
        }
    }
    if (y < v.front() || y > v.back()) {
        throw range_error("invert_monotone: y = " + std::to_string(y) +
                          " outside sampled value range");
    }
    double lo = f.grid.start();
    double hi = f.grid.end();
    const double tol = 1e-10 * f.grid.length();
    // Bisect on the linear interpolant; it inherits strict monotonicity
    // from the samples, so the bracket is always valid.
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (interp_core(f, mid) < y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double weighted_norm(const Grid& grid, const std::vector<double>& values) {
    return std::sqrt(quad_product(grid, values, values));
}

} // namespace qmem
