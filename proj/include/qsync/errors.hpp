#pragma once

#include <stdexcept>
#include <string>

namespace qsync {

// Steady-state solve found more than one null direction.
struct MultiplicityError : std::runtime_error {
    int nullspace_dim;
    explicit MultiplicityError(int dim)
        : std::runtime_error("steady_state: Liouvillian nullspace dimension " +
                             std::to_string(dim) + ", steady state is not unique"),
          nullspace_dim(dim) {}
};

// Adaptive integrator drove the step size below the representable floor.
struct StiffnessError : std::runtime_error {
    double t_fail;
    double h_fail;
    StiffnessError(double t, double h)
        : std::runtime_error("evolve: step size underflow at t = " + std::to_string(t) +
                             " (h = " + std::to_string(h) + "); problem too stiff"),
          t_fail(t), h_fail(h) {}
};

// Eigenvector continuation lost track of a level.
struct TrackingError : std::runtime_error {
    double overlap;
    explicit TrackingError(double ov)
        : std::runtime_error("pump_shift: eigenvector tracking ambiguous (overlap " +
                             std::to_string(ov) + " < 0.5)"),
          overlap(ov) {}
};

// A state violated a structural precondition (block structure, positivity, ...).
struct StructureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Relaxation-profile fit did not look like a single exponential.
struct FitError : std::runtime_error {
    double rms_residual;
    explicit FitError(double rms)
        : std::runtime_error("extract_rates: fit rms residual " + std::to_string(rms) +
                             " > 0.02; model is not effectively two-level here"),
          rms_residual(rms) {}
};

// Trailing-window average requested before the trajectory settled.
struct ConvergenceError : std::runtime_error {
    double drift;
    explicit ConvergenceError(double d)
        : std::runtime_error("time_averaged_observable: trailing window still drifting (" +
                             std::to_string(d) + " relative)"),
          drift(d) {}
};

// An experiment description failed schema validation; field names the spot.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(const std::string& where, const std::string& why)
        : std::runtime_error(where + ": " + why), field(where) {}
};

}  // namespace qsync
