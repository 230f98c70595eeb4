#include "qmem/storage.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "qmem/errors.hpp"
#include "qmem/threads.hpp"

namespace qmem {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880168872421;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993; // 1/sqrt(2 pi)

// Gaussian tail cut for the cell window of the exact convolution: beyond
// 10 sigma both the erf difference and the pdf terms vanish to double
// precision, so skipping those cells does not change the result.
constexpr double kTailSigmas = 10.0;

} // namespace

void validate(const StorageModel& model) {
    if (!std::isfinite(model.delta_l) || model.delta_l < 0.0) {
        throw parameter_error("StorageModel: delta_l must be non-negative and finite");
    }
}

Grid extended_grid(const Grid& source, double delta_l) {
    if (!std::isfinite(delta_l) || delta_l < 0.0) {
        throw parameter_error("extended_grid: delta_l must be non-negative and finite");
    }
    if (delta_l == 0.0) return source;
    const double h = source.spacing();
    // Whole-cell padding keeps the source nodes as a subset of the
    // extended nodes (up to rounding), which matters for the exactness
    // of the small-delta_l limit.
    const int pad = static_cast<int>(std::ceil(4.0 * delta_l / h - 1e-12));
    if (pad <= 0) return source;
    return Grid(source.start() - static_cast<double>(pad) * h,
                source.end() + static_cast<double>(pad) * h, source.size() + 2 * pad);
}

SampledFunction blur_free_expansion(const SampledFunction& profile, double delta_l) {
    if (!std::isfinite(delta_l) || delta_l < 0.0) {
        throw parameter_error("blur_free_expansion: delta_l must be non-negative and finite");
    }
    if (delta_l == 0.0) return profile;

    const Grid& src = profile.grid;
    const Grid dst = extended_grid(src, delta_l);
    const double sigma = delta_l / kSqrt2;
    const double inv_dl = 1.0 / delta_l;        // = 1 / (sigma sqrt(2))
    const double inv_sigma = 1.0 / sigma;
    const double sigma2 = sigma * sigma;
    const double window = kTailSigmas * sigma;
    const int n_src = src.size();
    const double h = src.spacing();
    const double src0 = src.start();

    std::vector<double> out(static_cast<std::size_t>(dst.size()), 0.0);
    std::vector<double> erf_node(static_cast<std::size_t>(n_src));
    std::vector<double> pdf_node(static_cast<std::size_t>(n_src));

    for (int d = 0; d < dst.size(); ++d) {
        const double z = dst.point(d);
        // Source cells [x_c, x_{c+1}] intersecting the +-window around z.
        int c_lo = static_cast<int>(std::ceil((z - window - src0) / h)) - 1;
        int c_hi = static_cast<int>(std::floor((z + window - src0) / h));
        c_lo = std::max(c_lo, 0);
        c_hi = std::min(c_hi, n_src - 2);
        if (c_lo > c_hi) continue;

        for (int j = c_lo; j <= c_hi + 1; ++j) {
            const double x = src.point(j);
            const double u = (x - z) * inv_dl;
            erf_node[static_cast<std::size_t>(j)] = std::erf(u);
            const double v = (x - z) * inv_sigma;
            pdf_node[static_cast<std::size_t>(j)] =
                std::exp(-0.5 * v * v) * kInvSqrt2Pi * inv_sigma;
        }

        // Exact Gaussian moment of each linear piece:
        //   Int_a^b (fa + slope (x - a)) N(x; z, sigma) dx
        //     = fa Phi + slope (Ex - a Phi),
        //   Phi = (erf(b') - erf(a')) / 2,  Ex = z Phi + sigma^2 (pdf_a - pdf_b).
        double acc = 0.0;
        for (int c = c_lo; c <= c_hi; ++c) {
            const std::size_t sc = static_cast<std::size_t>(c);
            const double a = src.point(c);
            const double b = src.point(c + 1);
            const double fa = profile.values[sc];
            const double fb = profile.values[sc + 1];
            const double phi = 0.5 * (erf_node[sc + 1] - erf_node[sc]);
            const double ex = z * phi + sigma2 * (pdf_node[sc] - pdf_node[sc + 1]);
            const double slope = (fb - fa) / (b - a);
            acc += fa * phi + slope * (ex - a * phi);
        }
        out[static_cast<std::size_t>(d)] = acc;
    }
    return SampledFunction(dst, std::move(out));
}

SampledFunction blurred_concentration(double length, double delta_l, int n) {
    if (!std::isfinite(length) || length <= 0.0) {
        throw parameter_error("blurred_concentration: length must be positive and finite");
    }
    if (!std::isfinite(delta_l) || delta_l < 0.0) {
        throw parameter_error("blurred_concentration: delta_l must be non-negative and finite");
    }
    if (n < 2) {
        throw parameter_error("blurred_concentration: need at least two nodes");
    }
    const Grid source(0.0, length, n);
    const Grid dst = extended_grid(source, delta_l);
    std::vector<double> vals(static_cast<std::size_t>(dst.size()));
    if (delta_l == 0.0) {
        std::fill(vals.begin(), vals.end(), 1.0);
    } else {
        const double inv_dl = 1.0 / delta_l;
        for (int i = 0; i < dst.size(); ++i) {
            const double z = dst.point(i);
            vals[static_cast<std::size_t>(i)] =
                0.5 * (std::erf(z * inv_dl) + std::erf((length - z) * inv_dl));
        }
    }
    // Normalize the total mass to exactly L; the +-4 DeltaL truncation
    // otherwise leaves a ~1e-8 deficit at large delta_l.
    SampledFunction raw(dst, std::move(vals));
    const double mass = quad(raw);
    if (!(mass > 0.0)) {
        throw consistency_error("blurred_concentration: non-positive total mass");
    }
    const double scale = length / mass;
    for (double& v : raw.values) v *= scale;
    return raw;
}

ScalingMap scaling_map(const SampledFunction& concentration) {
    const Grid& grid = concentration.grid;
    const int n = grid.size();
    const double h = grid.spacing();
    std::vector<double> cum(static_cast<std::size_t>(n));
    cum[0] = 0.0;
    for (int i = 1; i < n; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        const double inc = 0.5 * h * (concentration.values[si - 1] + concentration.values[si]);
        if (!(inc > 0.0)) {
            throw parameter_error(
                "scaling_map: concentration must be strictly positive between nodes");
        }
        cum[si] = cum[si - 1] + inc;
    }
    return ScalingMap{SampledFunction(grid, std::move(cum)), concentration};
}

SampledFunction rescale_to_optical_depth(const SampledFunction& blurred,
                                         const ScalingMap& map, Transform transform,
                                         const Grid& target) {
    if (blurred.grid != map.f.grid) {
        throw parameter_error(
            "rescale_to_optical_depth: profile and map grids do not match");
    }
    const double y_lo = map.f.values.front();
    const double y_hi = map.f.values.back();
    std::vector<double> out(static_cast<std::size_t>(target.size()));
    for (int i = 0; i < target.size(); ++i) {
        double y = target.point(i);
        // The map ends at the total mass (= L up to rounding); clamp so
        // the last node cannot fall out of range by one ulp.
        y = std::clamp(y, y_lo, y_hi);
        const double x = invert_monotone(map.f, y);
        double v = eval_linear(blurred, x);
        if (transform == Transform::kDensity) {
            const double fprime = std::max(eval_linear(map.concentration, x), 1e-300);
            v /= std::sqrt(fprime);
        }
        out[static_cast<std::size_t>(i)] = v;
    }
    return SampledFunction(target, std::move(out));
}

ResponseSet store_free_expansion(const ResponseSet& responses, double delta_l,
                                 Transform transform) {
    if (!std::isfinite(delta_l) || delta_l < 0.0) {
        throw parameter_error("store_free_expansion: delta_l must be non-negative and finite");
    }
    if (delta_l == 0.0) return responses;
    if (responses.grid.start() != 0.0) {
        throw parameter_error("store_free_expansion: spatial grid must start at z = 0");
    }
    const double length = responses.grid.length();
    const SampledFunction conc =
        blurred_concentration(length, delta_l, responses.grid.size());
    const ScalingMap map = scaling_map(conc);

    std::vector<std::vector<double>> stored;
    stored.reserve(static_cast<std::size_t>(responses.count()));
    for (int i = 0; i < responses.count(); ++i) {
        const SampledFunction psi(responses.grid,
                                  responses.unit_modes[static_cast<std::size_t>(i)]);
        const SampledFunction blurred = blur_free_expansion(psi, delta_l);
        SampledFunction back =
            rescale_to_optical_depth(blurred, map, transform, responses.grid);
        stored.push_back(std::move(back.values));
    }
    return ResponseSet(responses.grid, std::move(stored), responses.norm_factors);
}

SampledFunction mix_uniform_profile(const SampledFunction& profile, MixNorm norm) {
    const double length = profile.grid.length();
    double level = 0.0;
    if (norm == MixNorm::kExcitation) {
        level = weighted_norm(profile.grid, profile.values) / std::sqrt(length);
    } else {
        level = quad(profile) / length;
    }
    return SampledFunction(profile.grid,
                           std::vector<double>(static_cast<std::size_t>(profile.size()),
                                               level));
}

ResponseSet mix_uniform(const ResponseSet& responses, MixNorm norm) {
    std::vector<std::vector<double>> mixed;
    mixed.reserve(static_cast<std::size_t>(responses.count()));
    for (int i = 0; i < responses.count(); ++i) {
        const SampledFunction psi(responses.grid,
                                  responses.unit_modes[static_cast<std::size_t>(i)]);
        mixed.push_back(mix_uniform_profile(psi, norm).values);
    }
    return ResponseSet(responses.grid, std::move(mixed), responses.norm_factors);
}

ResponseSet apply_storage(const ResponseSet& responses, const StorageModel& model) {
    validate(model);
    switch (model.kind) {
        case StorageModel::Kind::kNone:
            return responses;
        case StorageModel::Kind::kFreeExpansion:
            return store_free_expansion(responses, model.delta_l, model.transform);
        case StorageModel::Kind::kFullMixing:
            return mix_uniform(responses, model.mix_norm);
    }
    throw parameter_error("apply_storage: unknown storage kind");
}

ClassicalityResult classicality_check(double temperature_kelvin,
                                      double concentration_per_m3, double mass_kg) {
    if (!std::isfinite(temperature_kelvin) || temperature_kelvin <= 0.0 ||
        !std::isfinite(concentration_per_m3) || concentration_per_m3 <= 0.0 ||
        !std::isfinite(mass_kg) || mass_kg <= 0.0) {
        throw parameter_error(
            "classicality_check: temperature, concentration and mass must be positive");
    }
    constexpr double kPlanck = 6.62607015e-34;    // J s (exact)
    constexpr double kBoltzmann = 1.380649e-23;   // J / K (exact)
    const double deg = std::cbrt(concentration_per_m3 * concentration_per_m3) *
                       kPlanck * kPlanck / (3.0 * mass_kg * kBoltzmann);
    const double ratio = temperature_kelvin / deg;
    return ClassicalityResult{ratio, deg, ratio >= 100.0};
}

} // namespace qmem
