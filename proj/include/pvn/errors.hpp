#pragma once

#include <stdexcept>
#include <string>

namespace pvn {

struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Quadrature ran out of subdivisions; carries the best estimate so callers
// can decide whether the bound is still usable.
struct non_convergence : std::runtime_error {
    double estimate;
    double error_bound;
    non_convergence(const std::string& what, double est, double err)
        : std::runtime_error(what), estimate(est), error_bound(err) {}
};

struct non_finite_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct overflow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_pgf_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct normalization_failure : std::runtime_error {
    double measured_integral;
    normalization_failure(const std::string& what, double measured)
        : std::runtime_error(what), measured_integral(measured) {}
};

struct degenerate_window : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace pvn
