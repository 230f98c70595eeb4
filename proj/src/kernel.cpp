#include "qmem/kernel.hpp"

#include <cmath>
#include <cstddef>

#include "qmem/errors.hpp"
#include "qmem/simd.hpp"
#include "qmem/threads.hpp"

namespace qmem {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210;

// Tolerance of the structural realness check: the imaginary part of the
// t' integral cancels pairwise about t' = t/2, so anything beyond
// rounding noise indicates a broken quadrature.
constexpr double kImagTol = 1e-9;

// Shared per-column precomputation for the inner t' quadrature.  With
// f_k = k/(m-1) the nodes are t' = t f_k, and the two Bessel factors
// J0(sqrt(z t f_k)) and J0(sqrt(z t (1 - f_k))) come from one table of
// J0(sqrt(z t) * sqrt(f_k)) read forwards and backwards.
struct InnerRule {
    std::vector<double> sqrt_frac; // sqrt(k / (m-1))
    std::vector<double> frac_comp; // 1 - 2 k/(m-1), argument of cos/sin

    explicit InnerRule(int m)
        : sqrt_frac(static_cast<std::size_t>(m)), frac_comp(static_cast<std::size_t>(m)) {
        for (int k = 0; k < m; ++k) {
            const double f = static_cast<double>(k) / static_cast<double>(m - 1);
            sqrt_frac[static_cast<std::size_t>(k)] = std::sqrt(f);
            frac_comp[static_cast<std::size_t>(k)] = 1.0 - 2.0 * f;
        }
    }
};

// Per-thread scratch for one column evaluation.
struct ColumnScratch {
    std::vector<double> cos_w;  // cos(t (1 - 2 f_k)) * w_k
    std::vector<double> sin_w;  // sin(t (1 - 2 f_k)) * w_k  (imaginary part)
    std::vector<double> args;   // sqrt(z t) * sqrt(f_k)
    std::vector<double> vals;   // J0 of args
    std::vector<double> vals_r; // vals reversed (the t - t' factor)

    explicit ColumnScratch(int m)
        : cos_w(static_cast<std::size_t>(m)), sin_w(static_cast<std::size_t>(m)),
          args(static_cast<std::size_t>(m)), vals(static_cast<std::size_t>(m)),
          vals_r(static_cast<std::size_t>(m)) {}
};

// Fill the trapezoid-weighted cos/sin factors for column time t.
void fill_column_weights(const InnerRule& rule, double t, ColumnScratch& s) {
    const std::size_t m = rule.frac_comp.size();
    const double h = t / static_cast<double>(m - 1);
    for (std::size_t k = 0; k < m; ++k) {
        const double phase = t * rule.frac_comp[k];
        const double w = (k == 0 || k == m - 1) ? 0.5 * h : h;
        s.cos_w[k] = std::cos(phase) * w;
        s.sin_w[k] = std::sin(phase) * w;
    }
}

// Evaluate one kernel entry given prepared column weights; returns the
// real part and stores the imaginary residual.
double kernel_entry(const InnerRule& rule, double z, double t, ColumnScratch& s,
                    double* imag_out) {
    const std::size_t m = rule.sqrt_frac.size();
    const double u = std::sqrt(z * t);
    for (std::size_t k = 0; k < m; ++k) {
        s.args[k] = u * rule.sqrt_frac[k];
    }
    simd::j0_block(s.args.data(), s.vals.data(), m);
    for (std::size_t k = 0; k < m; ++k) {
        s.vals_r[k] = s.vals[m - 1 - k];
    }
    const double re = simd::dot3(s.vals.data(), s.vals_r.data(), s.cos_w.data(), m);
    *imag_out = simd::dot3(s.vals.data(), s.vals_r.data(), s.sin_w.data(), m) * kInvSqrt2;
    return re * kInvSqrt2;
}

} // namespace

void validate(const CycleParams& params) {
    if (!std::isfinite(params.length) || params.length <= 0.0) {
        throw parameter_error("CycleParams: length must be positive and finite");
    }
    if (!std::isfinite(params.write_duration) || params.write_duration <= 0.0) {
        throw parameter_error("CycleParams: write_duration must be positive and finite");
    }
    if (!std::isfinite(params.read_duration) || params.read_duration <= 0.0) {
        throw parameter_error("CycleParams: read_duration must be positive and finite");
    }
    if (params.nz < 2 || params.nt < 2) {
        throw parameter_error("CycleParams: nz and nt must be at least 2");
    }
    if (params.inner_n != 0 && params.inner_n < 2) {
        throw parameter_error("CycleParams: inner_n must be 0 (auto) or at least 2");
    }
}

bool out_of_model(const CycleParams& params) {
    return params.write_duration >= params.length ||
           params.read_duration >= params.length;
}

std::string validity_warning(const CycleParams& params) {
    if (!out_of_model(params)) return {};
    return "WARNING: stage duration reaches the medium length (T >= L); "
           "the single-pass model is out of its validity regime and "
           "results are marked out-of-model";
}

SampledKernel::SampledKernel(Grid rows, Grid cols, std::vector<double> vals, bool sym)
    : row_grid(std::move(rows)), col_grid(std::move(cols)), values(std::move(vals)),
      symmetric(sym) {
    const std::size_t expect = static_cast<std::size_t>(row_grid.size()) *
                               static_cast<std::size_t>(col_grid.size());
    if (values.size() != expect) {
        throw parameter_error("SampledKernel: value count does not match grids");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw parameter_error("SampledKernel: values must be finite");
        }
    }
}

double SampledKernel::max_abs() const {
    double m = 0.0;
    for (double v : values) {
        const double a = std::fabs(v);
        if (a > m) m = a;
    }
    return m;
}

double half_kernel_point(double z, double t, int inner_n) {
    if (!std::isfinite(z) || z < 0.0) {
        throw parameter_error("half_kernel_point: z must be non-negative and finite");
    }
    if (!std::isfinite(t) || t < 0.0) {
        throw parameter_error("half_kernel_point: t must be non-negative and finite");
    }
    if (inner_n < 2) {
        throw parameter_error("half_kernel_point: inner_n must be at least 2");
    }
    if (t == 0.0) return 0.0;

    const InnerRule rule(inner_n);
    ColumnScratch scratch(inner_n);
    fill_column_weights(rule, t, scratch);
    double imag = 0.0;
    const double re = kernel_entry(rule, z, t, scratch, &imag);
    if (std::fabs(imag) > kImagTol * (1.0 + std::fabs(re))) {
        throw consistency_error("half_kernel_point: imaginary part failed to cancel");
    }
    return re;
}

SampledKernel build_half_kernel(const CycleParams& params, Stage stage,
                                unsigned workers) {
    validate(params);
    const double duration =
        (stage == Stage::kWrite) ? params.write_duration : params.read_duration;
    const Grid zgrid(0.0, params.length, params.nz);
    const Grid tgrid(0.0, duration, params.nt);
    const int inner = params.effective_inner();
    const int nz = params.nz;
    const int nt = params.nt;

    std::vector<double> values(static_cast<std::size_t>(nz) * static_cast<std::size_t>(nt),
                               0.0);
    const InnerRule rule(inner);
    // Worst imaginary-over-(1+real) ratio per column; reduced after the
    // join so worker count cannot affect the outcome.
    std::vector<double> imag_ratio(static_cast<std::size_t>(nt), 0.0);

    parallel_for(static_cast<std::size_t>(nt), workers,
                 [&](std::size_t j_begin, std::size_t j_end) {
                     ColumnScratch scratch(inner);
                     for (std::size_t j = j_begin; j < j_end; ++j) {
                         const double t = tgrid.point(static_cast<int>(j));
                         if (t == 0.0) continue; // column stays zero
                         fill_column_weights(rule, t, scratch);
                         double worst = 0.0;
                         for (int i = 0; i < nz; ++i) {
                             double imag = 0.0;
                             const double re = kernel_entry(rule, zgrid.point(i), t,
                                                            scratch, &imag);
                             values[static_cast<std::size_t>(i) *
                                        static_cast<std::size_t>(nt) +
                                    j] = re;
                             const double ratio =
                                 std::fabs(imag) / (1.0 + std::fabs(re));
                             if (ratio > worst) worst = ratio;
                         }
                         imag_ratio[j] = worst;
                     }
                 });

    for (double r : imag_ratio) {
        if (r > kImagTol) {
            throw consistency_error(
                "build_half_kernel: imaginary part failed to cancel");
        }
    }
    return SampledKernel(zgrid, tgrid, std::move(values), false);
}

namespace {

// Transpose a row-major matrix (rows x cols) into (cols x rows).
std::vector<double> transpose(const std::vector<double>& a, int rows, int cols) {
    std::vector<double> out(a.size());
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            out[static_cast<std::size_t>(j) * static_cast<std::size_t>(rows) +
                static_cast<std::size_t>(i)] =
                a[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                  static_cast<std::size_t>(j)];
        }
    }
    return out;
}

double measured_asymmetry(const std::vector<double>& g, int n) {
    double worst = 0.0;
    double scale = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const double gab = g[static_cast<std::size_t>(a) * static_cast<std::size_t>(n) +
                                 static_cast<std::size_t>(b)];
            const double gba = g[static_cast<std::size_t>(b) * static_cast<std::size_t>(n) +
                                 static_cast<std::size_t>(a)];
            const double d = std::fabs(gab - gba);
            if (d > worst) worst = d;
            const double m = std::fabs(gab);
            if (m > scale) scale = m;
        }
    }
    return (scale > 0.0) ? worst / scale : 0.0;
}

// Shared core: contract two half kernels over the spatial weights.
// Rows of the result run over the write time grid, columns over the
// read time grid.
std::vector<double> contract_over_space(const SampledKernel& write_kernel,
                                        const SampledKernel& read_kernel,
                                        unsigned workers) {
    const int nz = write_kernel.rows();
    const int ntw = write_kernel.cols();
    const int ntr = read_kernel.cols();
    const std::vector<double> wt = transpose(write_kernel.values, nz, ntw);
    const std::vector<double> rt = transpose(read_kernel.values, nz, ntr);
    const std::vector<double>& wz = write_kernel.row_grid.weights();

    std::vector<double> g(static_cast<std::size_t>(ntw) * static_cast<std::size_t>(ntr));
    parallel_for(static_cast<std::size_t>(ntw), workers,
                 [&](std::size_t a_begin, std::size_t a_end) {
                     for (std::size_t a = a_begin; a < a_end; ++a) {
                         const double* wrow = wt.data() + a * static_cast<std::size_t>(nz);
                         for (int b = 0; b < ntr; ++b) {
                             g[a * static_cast<std::size_t>(ntr) +
                               static_cast<std::size_t>(b)] =
                                 simd::dot3(wrow,
                                            rt.data() + static_cast<std::size_t>(b) *
                                                            static_cast<std::size_t>(nz),
                                            wz.data(), static_cast<std::size_t>(nz));
                         }
                     }
                 });
    return g;
}

} // namespace

SampledKernel build_cycle_kernel(const SampledKernel& write_kernel,
                                 const SampledKernel& read_kernel,
                                 unsigned workers) {
    if (write_kernel.row_grid != read_kernel.row_grid) {
        throw parameter_error("build_cycle_kernel: stages must share the spatial grid");
    }
    std::vector<double> g = contract_over_space(write_kernel, read_kernel, workers);
    const int ntw = write_kernel.cols();

    bool symmetric = false;
    if (write_kernel.col_grid == read_kernel.col_grid) {
        symmetric = measured_asymmetry(g, ntw) <= 1e-10;
    }
    return SampledKernel(write_kernel.col_grid, read_kernel.col_grid, std::move(g),
                         symmetric);
}

SymmetrizedCycle symmetrize_asymmetric(const CycleParams& params, unsigned workers) {
    validate(params);
    const SampledKernel write_kernel = build_half_kernel(params, Stage::kWrite, workers);
    const SampledKernel read_kernel =
        (params.write_duration == params.read_duration)
            ? write_kernel
            : build_half_kernel(params, Stage::kRead, workers);
    std::vector<double> rect = contract_over_space(write_kernel, read_kernel, workers);

    const int nt = params.nt;
    const Grid wgrid = write_kernel.col_grid;
    const Grid rgrid = read_kernel.col_grid;
    const double k = params.write_duration / params.read_duration;

    // Read the rectangular kernel on the square write domain: for each
    // write-grid column position t', sample the read axis at t'/k.  With
    // matching node counts these positions coincide with read nodes up
    // to rounding; interpolation keeps the construction general.
    std::vector<double> h(static_cast<std::size_t>(nt) * static_cast<std::size_t>(nt));
    for (int a = 0; a < nt; ++a) {
        const double* row = rect.data() + static_cast<std::size_t>(a) *
                                              static_cast<std::size_t>(nt);
        const std::vector<double> row_copy(row, row + nt);
        const SampledFunction row_fn(rgrid, row_copy);
        for (int b = 0; b < nt; ++b) {
            const double pos = wgrid.point(b) / k;
            h[static_cast<std::size_t>(a) * static_cast<std::size_t>(nt) +
              static_cast<std::size_t>(b)] = eval_linear(row_fn, pos);
        }
    }

    const double residual = measured_asymmetry(h, nt);
    // Keep exactly the symmetric part; the caller judges the residual.
    std::vector<double> sym(h.size());
    for (int a = 0; a < nt; ++a) {
        for (int b = 0; b < nt; ++b) {
            const std::size_t ab = static_cast<std::size_t>(a) *
                                       static_cast<std::size_t>(nt) +
                                   static_cast<std::size_t>(b);
            const std::size_t ba = static_cast<std::size_t>(b) *
                                       static_cast<std::size_t>(nt) +
                                   static_cast<std::size_t>(a);
            sym[ab] = 0.5 * (h[ab] + h[ba]);
        }
    }
    return SymmetrizedCycle{SampledKernel(wgrid, wgrid, std::move(sym), true), k,
                            residual};
}

} // namespace qmem
