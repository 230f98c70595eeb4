#include "qmem/response.hpp"

#include <cmath>

#include "qmem/errors.hpp"

namespace qmem {

ResponseSet::ResponseSet(Grid g, std::vector<std::vector<double>> shapes,
                         std::vector<double> norms)
    : grid(std::move(g)), unit_modes(std::move(shapes)), norm_factors(std::move(norms)) {
    if (unit_modes.size() != norm_factors.size()) {
        throw parameter_error("ResponseSet: shape/norm count mismatch");
    }
    for (const std::vector<double>& m : unit_modes) {
        if (static_cast<int>(m.size()) != grid.size()) {
            throw parameter_error("ResponseSet: shape samples do not match grid");
        }
        for (double v : m) {
            if (!std::isfinite(v)) {
                throw parameter_error("ResponseSet: shape values must be finite");
            }
        }
    }
    for (double s : norm_factors) {
        if (!std::isfinite(s) || s < 0.0) {
            throw parameter_error("ResponseSet: norm factors must be non-negative");
        }
    }
}

} // namespace qmem
