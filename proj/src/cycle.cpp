#include "qmem/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <numeric>

#include "qmem/errors.hpp"
#include "qmem/simd.hpp"
#include "qmem/threads.hpp"

namespace qmem {

ResponseSet response_functions(const SampledKernel& half_write, const ModeSet& modes,
                               double* max_norm_mismatch, unsigned workers) {
    if (half_write.col_grid != modes.grid) {
        throw parameter_error(
            "response_functions: kernel time grid does not match mode grid");
    }
    const Grid& zgrid = half_write.row_grid;
    const Grid& tgrid = half_write.col_grid;
    const int nz = zgrid.size();
    const int nt = tgrid.size();
    const int m = modes.count();
    const std::vector<double>& wt = tgrid.weights();

    std::vector<std::vector<double>> raw(static_cast<std::size_t>(m));
    for (auto& v : raw) v.assign(static_cast<std::size_t>(nz), 0.0);
    parallel_for(static_cast<std::size_t>(nz), workers,
                 [&](std::size_t z_begin, std::size_t z_end) {
                     for (std::size_t z = z_begin; z < z_end; ++z) {
                         const double* row = half_write.row(static_cast<int>(z));
                         for (int i = 0; i < m; ++i) {
                             raw[static_cast<std::size_t>(i)][z] = simd::dot3(
                                 row, modes.functions[static_cast<std::size_t>(i)].data(),
                                 wt.data(), static_cast<std::size_t>(nt));
                         }
                     }
                 });

    std::vector<std::vector<double>> shapes;
    std::vector<double> norms;
    shapes.reserve(static_cast<std::size_t>(m));
    norms.reserve(static_cast<std::size_t>(m));
    double worst_mismatch = 0.0;
    const double s1 = modes.eigenvalues.empty() ? 0.0 : modes.eigenvalues[0];
    for (int i = 0; i < m; ++i) {
        std::vector<double>& r = raw[static_cast<std::size_t>(i)];
        const double nrm = weighted_norm(zgrid, r);
        if (nrm > 1e-300) {
            const double inv = 1.0 / nrm;
            for (double& v : r) v *= inv;
        } else {
            std::fill(r.begin(), r.end(), 0.0);
        }
        // The measured norm must reproduce sqrt(s_i); a gross mismatch
        // means kernel and modes are inconsistent.
        const double expected = std::sqrt(modes.eigenvalues[static_cast<std::size_t>(i)]);
        const double floor = 1e-6 * std::sqrt(std::max(s1, 1e-300));
        if (expected > floor || nrm > floor) {
            const double mismatch =
                std::fabs(nrm - expected) / std::max({expected, nrm, floor});
            worst_mismatch = std::max(worst_mismatch, mismatch);
            if (mismatch > 1e-2) {
                throw consistency_error(
                    "response_functions: response norm disagrees with sqrt(s)");
            }
        }
        shapes.push_back(std::move(r));
        norms.push_back(nrm);
    }
    if (max_norm_mismatch != nullptr) *max_norm_mismatch = worst_mismatch;
    return ResponseSet(zgrid, std::move(shapes), std::move(norms));
}

double OverlapMatrix::row_norm_sq(int i) const {
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) {
        const double v = at(i, j);
        acc += v * v;
    }
    return acc;
}

OverlapMatrix overlap_matrix(const ResponseSet& stored, const ResponseSet& reference) {
    if (stored.grid != reference.grid) {
        throw parameter_error("overlap_matrix: response sets live on different grids");
    }
    OverlapMatrix q;
    q.rows = stored.count();
    q.cols = reference.count();
    q.q.resize(static_cast<std::size_t>(q.rows) * static_cast<std::size_t>(q.cols));
    for (int i = 0; i < q.rows; ++i) {
        for (int j = 0; j < q.cols; ++j) {
            q.q[static_cast<std::size_t>(i) * static_cast<std::size_t>(q.cols) +
                static_cast<std::size_t>(j)] =
                quad_product(stored.grid, stored.unit_modes[static_cast<std::size_t>(i)],
                             reference.unit_modes[static_cast<std::size_t>(j)]);
        }
    }
    return q;
}

OutputProfile output_profile(int mode_index, const OverlapMatrix& q, const ModeSet& modes) {
    if (mode_index < 0 || mode_index >= q.rows) {
        throw parameter_error("output_profile: mode index out of range");
    }
    if (q.cols > modes.count()) {
        throw parameter_error("output_profile: overlap matrix wider than mode set");
    }
    const std::size_t n = static_cast<std::size_t>(modes.grid.size());
    std::vector<double> out(n, 0.0);
    const double s_i = modes.eigenvalues[static_cast<std::size_t>(mode_index)];
    for (int j = 0; j < q.cols; ++j) {
        const double s_j = modes.eigenvalues[static_cast<std::size_t>(j)];
        const double coeff = q.at(mode_index, j) * std::sqrt(s_i * s_j);
        const std::vector<double>& phi = modes.functions[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < n; ++k) {
            out[k] += coeff * phi[k];
        }
    }
    const double tail = modes.eigenvalues.back();
    return OutputProfile{SampledFunction(modes.grid, std::move(out)), tail};
}

double efficiency_overlap(int mode_index, const OverlapMatrix& q, const ModeSet& modes) {
    if (mode_index < 0 || mode_index >= q.rows) {
        throw parameter_error("efficiency_overlap: mode index out of range");
    }
    if (q.cols > modes.count()) {
        throw parameter_error("efficiency_overlap: overlap matrix wider than mode set");
    }
    const double s_i = modes.eigenvalues[static_cast<std::size_t>(mode_index)];
    double acc = 0.0;
    for (int j = 0; j < q.cols; ++j) {
        const double v = q.at(mode_index, j);
        acc += v * v * s_i * modes.eigenvalues[static_cast<std::size_t>(j)];
    }
    return acc;
}

double efficiency_direct(const SampledFunction& input, const SampledKernel& half_write,
                         const StorageModel& storage, const SampledKernel& half_read,
                         unsigned workers) {
    validate(storage);
    if (input.grid != half_write.col_grid) {
        throw parameter_error("efficiency_direct: input grid does not match write kernel");
    }
    if (half_write.row_grid != half_read.row_grid) {
        throw parameter_error("efficiency_direct: kernels do not share the spatial grid");
    }
    // Normalize a non-unit input; efficiency is defined per unit energy.
    std::vector<double> a = input.values;
    const double nrm = weighted_norm(input.grid, a);
    if (!(nrm > 1e-300)) {
        throw parameter_error("efficiency_direct: input profile has zero norm");
    }
    if (std::fabs(nrm - 1.0) > 1e-9) {
        std::cerr << "note: efficiency_direct normalizing input (|a| = " << nrm << ")\n";
    }
    for (double& v : a) v /= nrm;

    const Grid& zgrid = half_write.row_grid;
    const Grid& rt_grid = half_read.col_grid;
    const int nz = zgrid.size();
    const int ntw = half_write.cols();
    const int ntr = half_read.cols();

    // Write stage: b(z) = Int dt K_w(z, t) a(t).
    const std::vector<double>& wt = half_write.col_grid.weights();
    std::vector<double> b(static_cast<std::size_t>(nz));
    parallel_for(static_cast<std::size_t>(nz), workers,
                 [&](std::size_t z_begin, std::size_t z_end) {
                     for (std::size_t z = z_begin; z < z_end; ++z) {
                         b[z] = simd::dot3(half_write.row(static_cast<int>(z)), a.data(),
                                           wt.data(), static_cast<std::size_t>(ntw));
                     }
                 });

    // Storage transform on the raw stored amplitude.
    SampledFunction stored(zgrid, std::move(b));
    switch (storage.kind) {
        case StorageModel::Kind::kNone:
            break;
        case StorageModel::Kind::kFreeExpansion: {
            if (storage.delta_l > 0.0) {
                const SampledFunction blurred =
                    blur_free_expansion(stored, storage.delta_l);
                const ScalingMap map = scaling_map(blurred_concentration(
                    zgrid.length(), storage.delta_l, zgrid.size()));
                stored = rescale_to_optical_depth(blurred, map, storage.transform, zgrid);
            }
            break;
        }
        case StorageModel::Kind::kFullMixing:
            stored = mix_uniform_profile(stored, storage.mix_norm);
            break;
    }

    // Read stage: a_out(t) = Int dz K_r(z, t) b(z); accumulate over the
    // kernel rows in fixed order.
    const std::vector<double>& wz = zgrid.weights();
    std::vector<double> out(static_cast<std::size_t>(ntr), 0.0);
    for (int z = 0; z < nz; ++z) {
        const double wb =
            wz[static_cast<std::size_t>(z)] * stored.values[static_cast<std::size_t>(z)];
        const double* row = half_read.row(z);
        for (int t = 0; t < ntr; ++t) {
            out[static_cast<std::size_t>(t)] += wb * row[static_cast<std::size_t>(t)];
        }
    }
    return quad_product(rt_grid, out, out);
}

std::vector<double> OptimizedCycle::efficiencies() const {
    std::vector<double> e(eigenvalues.size());
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        e[i] = eigenvalues[i] * eigenvalues[i];
    }
    return e;
}

OptimizedCycle optimized_cycle(const ResponseSet& stored, const ResponseSet& reference,
                               const ModeSet& modes, int max_modes) {
    const int m = std::min({max_modes, stored.count(), reference.count(), modes.count()});
    if (m < 1) {
        throw parameter_error("optimized_cycle: need at least one mode");
    }
    const OverlapMatrix q = overlap_matrix(stored, reference);

    // Effective coefficient matrix of the degraded cycle in the fresh
    // mode basis: C_ij = sqrt(s_i s_j) Q_ij.
    const std::size_t sm = static_cast<std::size_t>(m);
    std::vector<double> c(sm * sm);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const double si = modes.eigenvalues[static_cast<std::size_t>(i)];
            const double sj = modes.eigenvalues[static_cast<std::size_t>(j)];
            c[static_cast<std::size_t>(i) * sm + static_cast<std::size_t>(j)] =
                std::sqrt(si * sj) * q.at(i, j);
        }
    }

    double max_abs = 0.0;
    double max_asym = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i) * sm +
                                   static_cast<std::size_t>(j);
            const std::size_t ji = static_cast<std::size_t>(j) * sm +
                                   static_cast<std::size_t>(i);
            max_abs = std::max(max_abs, std::fabs(c[ij]));
            max_asym = std::max(max_asym, std::fabs(c[ij] - c[ji]));
        }
    }
    const double residual = (max_abs > 0.0) ? max_asym / max_abs : 0.0;
    const bool warned = residual > 0.05;
    if (warned) {
        std::cerr << "WARNING: optimized_cycle: antisymmetric part of the effective "
                     "kernel is "
                  << residual << " relative; symmetric reduction is approximate\n";
    }

    std::vector<double> csym(sm * sm);
    for (std::size_t i = 0; i < sm; ++i) {
        for (std::size_t j = 0; j < sm; ++j) {
            csym[i * sm + j] = 0.5 * (c[i * sm + j] + c[j * sm + i]);
        }
    }

    std::vector<double> vt;
    detail::jacobi_symmetric(csym, vt, m);

    std::vector<int> order(sm);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return csym[static_cast<std::size_t>(x) * sm + static_cast<std::size_t>(x)] >
               csym[static_cast<std::size_t>(y) * sm + static_cast<std::size_t>(y)];
    });

    const std::size_t n = static_cast<std::size_t>(modes.grid.size());
    std::vector<double> eigs(sm);
    std::vector<std::vector<double>> funcs(sm);
    for (std::size_t k = 0; k < sm; ++k) {
        const std::size_t r = static_cast<std::size_t>(order[k]);
        eigs[k] = csym[r * sm + r];
        std::vector<double> chi(n, 0.0);
        for (std::size_t i = 0; i < sm; ++i) {
            const double coeff = vt[r * sm + i];
            const std::vector<double>& phi = modes.functions[i];
            for (std::size_t t = 0; t < n; ++t) {
                chi[t] += coeff * phi[t];
            }
        }
        detail::fix_mode_sign(modes.grid, chi);
        funcs[k] = std::move(chi);
    }
    return OptimizedCycle{modes.grid, std::move(eigs), std::move(funcs), residual, warned};
}

} // namespace qmem
