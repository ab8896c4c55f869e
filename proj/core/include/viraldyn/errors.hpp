#pragma once

#include <stdexcept>

namespace viraldyn {

// Malformed scenario files, out-of-range parameters, schema violations.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Root bracketing / refinement failures in the steady-state machinery.
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Time integration produced NaN or negativity beyond the clamp tolerance.
struct integration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace viraldyn
