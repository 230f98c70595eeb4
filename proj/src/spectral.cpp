#include "qmem/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "qmem/errors.hpp"
#include "qmem/simd.hpp"

namespace qmem {

namespace detail {

namespace {
// Convergence: stop when the off-diagonal Frobenius mass drops below
// this fraction of the total Frobenius norm.
constexpr double kOffDiagTol = 1e-14;
constexpr int kMaxSweeps = 40;
} // namespace

// Cyclic Jacobi diagonalization of a symmetric matrix held row-major in
// `a` (n x n).  Eigenvectors accumulate as the ROWS of `vt`: row r of vt
// converges to the eigenvector of the r-th diagonal entry.  Rotation
// order is fixed (row-cyclic p < q), so the result is bitwise
// reproducible.
void jacobi_symmetric(std::vector<double>& a, std::vector<double>& vt, int n) {
    const std::size_t sn = static_cast<std::size_t>(n);
    vt.assign(sn * sn, 0.0);
    for (std::size_t i = 0; i < sn; ++i) vt[i * sn + i] = 1.0;
    double frob2 = 0.0;
    for (double x : a) frob2 += x * x;
    const double frob = std::sqrt(frob2);
    if (frob == 0.0) return; // zero matrix: eigenvalues all zero, vt = I
    const double stop_off = kOffDiagTol * frob;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off2 = 0.0;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                off2 += 2.0 * a[static_cast<std::size_t>(p) * sn +
                               static_cast<std::size_t>(q)] *
                        a[static_cast<std::size_t>(p) * sn + static_cast<std::size_t>(q)];
            }
        }
        if (std::sqrt(off2) <= stop_off) return;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const std::size_t pq = static_cast<std::size_t>(p) * sn +
                                       static_cast<std::size_t>(q);
                const double apq = a[pq];
                if (std::fabs(apq) <= 1e-300) continue;
                const std::size_t pp = static_cast<std::size_t>(p) * sn +
                                       static_cast<std::size_t>(p);
                const std::size_t qq = static_cast<std::size_t>(q) * sn +
                                       static_cast<std::size_t>(q);
                const double app = a[pp];
                const double aqq = a[qq];

                // Symmetric Schur rotation annihilating a_pq.
                const double theta = (aqq - app) / (2.0 * apq);
                const double t_abs = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double t = (theta >= 0.0) ? t_abs : -t_abs;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // Rows p and q carry a_p* and a_q*; by symmetry this is
                // also the column update.  Rotate rows, then restore the
                // symmetric storage by copying into the columns.
                double* row_p = a.data() + static_cast<std::size_t>(p) * sn;
                double* row_q = a.data() + static_cast<std::size_t>(q) * sn;
                simd::rot(row_p, row_q, c, s, sn);

                // Analytic 2x2 block (the row pass produced intermediate
                // values there).
                const double app_new = app - t * apq;
                const double aqq_new = aqq + t * apq;
                row_p[p] = app_new;
                row_q[q] = aqq_new;
                row_p[q] = 0.0;
                row_q[p] = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    a[static_cast<std::size_t>(i) * sn + static_cast<std::size_t>(p)] =
                        row_p[i];
                    a[static_cast<std::size_t>(i) * sn + static_cast<std::size_t>(q)] =
                        row_q[i];
                }

                simd::rot(vt.data() + static_cast<std::size_t>(p) * sn,
                          vt.data() + static_cast<std::size_t>(q) * sn, c, s, sn);
            }
        }
    }
    throw consistency_error("jacobi_symmetric: no convergence after maximum sweeps");
}

// Apply the deterministic sign convention in place.
void fix_mode_sign(const Grid& grid, std::vector<double>& phi) {
    double integral = 0.0;
    const std::vector<double>& w = grid.weights();
    for (std::size_t i = 0; i < phi.size(); ++i) integral += w[i] * phi[i];
    bool flip = false;
    if (std::fabs(integral) > 1e-12) {
        flip = integral < 0.0;
    } else {
        for (double v : phi) {
            if (std::fabs(v) > 1e-12) {
                flip = v < 0.0;
                break;
            }
        }
    }
    if (flip) {
        for (double& v : phi) v = -v;
    }
}

} // namespace detail

ModeSet::ModeSet(Grid g, std::vector<double> s, std::vector<std::vector<double>> f)
    : grid(std::move(g)), eigenvalues(std::move(s)), functions(std::move(f)) {
    if (eigenvalues.size() != functions.size()) {
        throw parameter_error("ModeSet: eigenvalue/function count mismatch");
    }
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] >= 0.0)) {
            throw parameter_error("ModeSet: eigenvalues must be non-negative");
        }
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) {
            throw parameter_error("ModeSet: eigenvalues must be non-increasing");
        }
        if (static_cast<int>(functions[i].size()) != grid.size()) {
            throw parameter_error("ModeSet: function samples do not match grid");
        }
    }
}

double orthonormality_defect(const ModeSet& modes) {
    double worst = 0.0;
    for (int i = 0; i < modes.count(); ++i) {
        for (int j = i; j < modes.count(); ++j) {
            const double g =
                quad_product(modes.grid, modes.functions[static_cast<std::size_t>(i)],
                             modes.functions[static_cast<std::size_t>(j)]);
            const double target = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::fabs(g - target));
        }
    }
    return worst;
}

ModeSet schmidt_decompose(const SampledKernel& kernel, int max_modes,
                          unsigned workers) {
    (void)workers; // the sweep order is inherently sequential
    if (!kernel.symmetric) {
        throw parameter_error("schmidt_decompose: kernel must be symmetric");
    }
    if (kernel.row_grid != kernel.col_grid) {
        throw parameter_error("schmidt_decompose: kernel grids must coincide");
    }
    if (max_modes < 1) {
        throw parameter_error("schmidt_decompose: need at least one mode");
    }
    const Grid& grid = kernel.row_grid;
    const int n = grid.size();
    const std::size_t sn = static_cast<std::size_t>(n);
    const int m = std::min(max_modes, n);

    // Weighted symmetric form A = diag(sqrt(w)) G diag(sqrt(w)).
    std::vector<double> sqw(sn);
    for (int i = 0; i < n; ++i) sqw[static_cast<std::size_t>(i)] = std::sqrt(grid.weight(i));
    std::vector<double> a(sn * sn);
    for (std::size_t i = 0; i < sn; ++i) {
        for (std::size_t j = 0; j < sn; ++j) {
            a[i * sn + j] = sqw[i] * kernel.values[i * sn + j] * sqw[j];
        }
    }
    std::vector<double> vt;
    detail::jacobi_symmetric(a, vt, n);

    // Collect, order, clamp.
    std::vector<int> order(sn);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return a[static_cast<std::size_t>(x) * sn + static_cast<std::size_t>(x)] >
               a[static_cast<std::size_t>(y) * sn + static_cast<std::size_t>(y)];
    });
    const double s1 = a[static_cast<std::size_t>(order[0]) * sn +
                        static_cast<std::size_t>(order[0])];
    const double neg_floor = -1e-9 * std::max(s1, 1.0);

    std::vector<double> svals;
    std::vector<std::vector<double>> funcs;
    svals.reserve(static_cast<std::size_t>(m));
    funcs.reserve(static_cast<std::size_t>(m));
    for (int idx = 0; idx < m; ++idx) {
        const std::size_t r = static_cast<std::size_t>(order[static_cast<std::size_t>(idx)]);
        double s = a[r * sn + r];
        if (s < 0.0) {
            if (s < neg_floor) {
                throw consistency_error(
                    "schmidt_decompose: significantly negative eigenvalue; "
                    "kernel is not positive semidefinite");
            }
            s = 0.0;
        }
        std::vector<double> phi(sn);
        for (std::size_t k = 0; k < sn; ++k) {
            phi[k] = vt[r * sn + k] / sqw[k];
        }
        detail::fix_mode_sign(grid, phi);
        svals.push_back(s);
        funcs.push_back(std::move(phi));
    }

    // Residual check ||(G w) phi - s phi||_inf <= 1e-6 s_1 on every
    // retained pair; catches silent non-convergence.
    const std::vector<double>& w = grid.weights();
    std::vector<double> wphi(sn);
    const double resid_tol = 1e-6 * std::max(svals[0], 1e-300);
    for (int idx = 0; idx < m; ++idx) {
        const std::vector<double>& phi = funcs[static_cast<std::size_t>(idx)];
        for (std::size_t k = 0; k < sn; ++k) wphi[k] = w[k] * phi[k];
        double worst = 0.0;
        for (std::size_t i = 0; i < sn; ++i) {
            double acc = 0.0;
            const double* row = kernel.values.data() + i * sn;
            for (std::size_t k = 0; k < sn; ++k) acc += row[k] * wphi[k];
            const double r = std::fabs(acc - svals[static_cast<std::size_t>(idx)] * phi[i]);
            if (r > worst) worst = r;
        }
        if (worst > resid_tol) {
            throw consistency_error("schmidt_decompose: eigenpair residual too large");
        }
    }

    return ModeSet(grid, std::move(svals), std::move(funcs));
}

SampledKernel reconstruct_kernel(const ModeSet& modes) {
    const Grid& grid = modes.grid;
    const std::size_t n = static_cast<std::size_t>(grid.size());
    std::vector<double> g(n * n, 0.0);
    for (int idx = 0; idx < modes.count(); ++idx) {
        const double s = modes.eigenvalues[static_cast<std::size_t>(idx)];
        const std::vector<double>& phi = modes.functions[static_cast<std::size_t>(idx)];
        for (std::size_t i = 0; i < n; ++i) {
            const double sp = s * phi[i];
            for (std::size_t j = 0; j < n; ++j) {
                g[i * n + j] += sp * phi[j];
            }
        }
    }
    return SampledKernel(grid, grid, std::move(g), true);
}

double reconstruction_residual(const ModeSet& modes, const SampledKernel& reference) {
    if (reference.row_grid != modes.grid || reference.col_grid != modes.grid) {
        throw parameter_error("reconstruction_residual: grids do not match");
    }
    const SampledKernel rebuilt = reconstruct_kernel(modes);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < reference.values.size(); ++i) {
        const double d = rebuilt.values[i] - reference.values[i];
        num += d * d;
        den += reference.values[i] * reference.values[i];
    }
    return (den > 0.0) ? std::sqrt(num / den) : std::sqrt(num);
}

ModeSet scaled_retrieval_modes(const ModeSet& modes, double k) {
    if (!std::isfinite(k) || k <= 0.0) {
        throw parameter_error("scaled_retrieval_modes: k must be positive and finite");
    }
    const Grid& src = modes.grid;
    if (src.start() != 0.0) {
        throw parameter_error("scaled_retrieval_modes: modes must start at t = 0");
    }
    const Grid dst(0.0, src.end() / k, src.size());
    const double amp = std::sqrt(k);
    std::vector<std::vector<double>> funcs;
    funcs.reserve(static_cast<std::size_t>(modes.count()));
    for (int idx = 0; idx < modes.count(); ++idx) {
        const SampledFunction phi(src, modes.functions[static_cast<std::size_t>(idx)]);
        std::vector<double> out(static_cast<std::size_t>(dst.size()));
        for (int i = 0; i < dst.size(); ++i) {
            out[static_cast<std::size_t>(i)] = amp * eval_linear(phi, k * dst.point(i));
        }
        funcs.push_back(std::move(out));
    }
    return ModeSet(dst, modes.eigenvalues, std::move(funcs));
}

std::vector<double> project(const SampledFunction& f, const ModeSet& modes) {
    if (f.grid != modes.grid) {
        throw parameter_error("project: signal grid does not match mode grid");
    }
    std::vector<double> coeff(static_cast<std::size_t>(modes.count()));
    for (int i = 0; i < modes.count(); ++i) {
        coeff[static_cast<std::size_t>(i)] =
            quad_product(f.grid, f.values, modes.functions[static_cast<std::size_t>(i)]);
    }
    return coeff;
}

} // namespace qmem
