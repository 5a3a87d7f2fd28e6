#pragma once

#include <array>
#include <vector>

#include "qsync/lindblad.hpp"
#include "qsync/models.hpp"
#include "qsync/types.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// frequency corrections of a pumped transmon with an auxiliary resonator
// ---------------------------------------------------------------------------

// Shift of the g-e transition from off-resonant coupling to a resonator:
// g^2 / (omega_q - omega_a). Throws for zero detuning.
double dispersive_shift(double g, double omega_q, double omega_a);

// Decay rate of the second excited level through a resonant resonator of
// linewidth kappa: 4 g^2 / kappa. Throws for kappa <= 0.
double gamma_f(double g, double kappa);

// Shift of the g-e transition caused by the two-photon pump. In the pump
// frame the lowest three transmon levels see
//   H = [[0, W, 0], [W, alpha/2, sqrt(2) W], [0, sqrt(2) W, -i gamma_f]]
// where W is the pump amplitude and alpha the positive anharmonicity scale
// that separates the e level from the two-photon-resonant g and f levels.
// The g and e eigenvalues are followed from W = 0 in n_steps continuation
// steps, matching eigenvectors by overlap; the shift is the change of the
// real-part splitting. Throws TrackingError when a match drops below 0.5.
double pump_shift(double pump_rabi, double alpha, double gamma_f_rate, int n_steps = 64);

// Net corrections {Delta_A, Delta_B}, dispersive plus pump shift per unit.
std::array<double, 2> calibrated_corrections(const CqedParams& p);

// ---------------------------------------------------------------------------
// effective gain and loss rates of one pumped unit
// ---------------------------------------------------------------------------

struct RateFit {
    double w_eff = 0.0;        // effective gain (rad/s)
    double gamma_eff = 0.0;    // effective loss (rad/s)
    double p_ss = 0.0;         // fitted steady excited population
    double rms_residual = 0.0; // fit quality over the sampled relaxation
};

// Relaxes the decoupled unit model from |e> x vacuum and fits the excited
// population of the qubit subspace (resonator traced out, renormalized over
// g and e) to p_ss + (p0 - p_ss) exp(-Gamma t). Returns w_eff = Gamma p_ss
// and gamma_eff = Gamma (1 - p_ss). t_max <= 0 selects 10 / gamma0. Throws
// FitError when the relaxation is not close to a single exponential.
RateFit extract_rates(const CqedParams& p, Qubit which, double t_max = 0.0,
                      int n_samples = 400);

// ---------------------------------------------------------------------------
// trailing-window averages of trajectory observables
// ---------------------------------------------------------------------------

// Mean of expectation(rho, op) over the trailing window_fraction of the
// trajectory. The two halves of the window must agree to 1e-4 relative,
// otherwise ConvergenceError reports the drift.
Complex time_averaged_observable(const std::vector<DensityMatrix>& trajectory, const Matrix& op,
                                 double window_fraction = 0.25);

// Same, with each sample demodulated by exp(i nu t) before averaging, which
// extracts the amplitude of a component rotating as exp(-i nu t).
Complex time_averaged_observable(const std::vector<DensityMatrix>& trajectory,
                                 const std::vector<double>& times, const Matrix& op, double nu,
                                 double window_fraction = 0.25);

// ---------------------------------------------------------------------------
// drive-locked quasi-steady state of the full circuit
// ---------------------------------------------------------------------------

struct LockedCircuitState {
    DensityMatrix rho;        // averaged two-qubit state in the drive frame
    Complex coh_a;            // locked g-e coherence of each transmon,
    Complex coh_b;            // renormalized over its g/e subspace
    double tail_a = 0.0;      // relative Aitken correction per coherence
    double tail_b = 0.0;
    double tail_state = 0.0;  // the same for the averaged state, Frobenius
    DensityMatrix last;       // final trajectory sample in the computational
                              // frame, reusable as the start of a longer or
                              // neighboring-parameter run
};

// Evolves the full circuit from the product of the decoupled unit steady
// states and averages in the frame where the drive-locked component is
// static: the g-e coherence of unit j is demodulated by exp(i nu_j t) with
// nu from cqed_demod_frequencies. Three trailing window means, each a
// quarter of the trajectory, are extrapolated by Aitken's delta-squared
// rule, which removes the leading exponential transient. The reduced state
// keeps the g/e levels of both transmons, renormalized and reprojected onto
// the closest physical state; |coh_j| is the circuit counterpart of
// |<S+_j>| of the two-qudit model, and sync_measure between the rho of an
// eps != 0 and an eps = 0 call is the counterpart of its synchronization
// measure. The tail fields report the relative size of the extrapolation
// step, a convergence proxy; they are not gated here.
//
// A non-null start replaces the product initial state; continuing from the
// last field of a nearby run shortens the transient (the magnitudes are
// unaffected by the accumulated demodulation phase of the previous run).
LockedCircuitState cqed_locked_state(const CqedParams& p, double t_span, int n_samples = 400,
                                     double rtol = 1e-6, double atol = 1e-9,
                                     const DensityMatrix* start = nullptr);

}  // namespace qsync
