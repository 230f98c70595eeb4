#pragma once
// Error taxonomy for the memory simulator.
//
// Four failure classes map onto the CLI exit codes:
//   usage errors        -> handled by the argument parser (exit 2)
//   parameter_error     -> invalid physical/grid parameters      (exit 3)
//   config_error        -> malformed or unknown configuration    (exit 3)
//   range_error         -> evaluation outside a sampled domain   (exit 3)
//   consistency_error   -> internal numerical checks failed      (exit 4)

#include <stdexcept>
#include <string>

namespace qmem {

// A precondition on user-supplied values does not hold (L <= 0, n < 2, ...).
class parameter_error : public std::invalid_argument {
public:
    explicit parameter_error(const std::string& what) : std::invalid_argument(what) {}
};

// A lookup or inversion left the sampled domain.
class range_error : public std::out_of_range {
public:
    explicit range_error(const std::string& what) : std::out_of_range(what) {}
};

// A configuration file could not be interpreted (unknown key, bad value).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A numerical self-check failed (quadrature residual, eigensolver stall, ...).
// Signals a defect or a misconfiguration, never a normal input condition.
class consistency_error : public std::runtime_error {
public:
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qmem
