#pragma once

#include <optional>
#include <vector>

#include "qsync/models.hpp"
#include "qsync/types.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// weak-drive cumulant solver for the two-qubit oscillator
// ---------------------------------------------------------------------------

// Observables are expanded as <O> = <O>_0 + eps <O>_1 + O(eps^2); the zeroth
// order keeps the U(1)-symmetric set, the first order the drive-induced
// coherences. Both systems are closed and linear for spin 1/2.

struct ZerothOrderState {
    double sz_a = 0.0;          // <Sz_A>
    double sz_b = 0.0;          // <Sz_B>
    double szsz = 0.0;          // <Sz_A Sz_B>
    Complex splus_a_sminus_b;   // <S+_A S-_B>
};

struct FirstOrderState {
    Complex splus_a;         // <S+_A>_1
    Complex splus_b;         // <S+_B>_1
    Complex splus_a_sz_b;    // <S+_A Sz_B>_1
    Complex sz_a_splus_b;    // <Sz_A S+_B>_1
    Complex splus_a_splus_b; // <S+_A S+_B>_1, identically zero
};

ZerothOrderState solve_zeroth(const OscillatorParams& p);
FirstOrderState solve_first(const OscillatorParams& p);

// ---------------------------------------------------------------------------
// zero crossings of the first-order coherence
// ---------------------------------------------------------------------------

// Filled with the closest approach when no simultaneous root is found.
struct ZeroCrossingScan {
    double g_at_min = 0.0;
    double min_magnitude = 0.0;
};

// Scans <S+_which>_1 over [g_lo, g_hi] (400 nodes), brackets sign changes of
// both quadratures, and bisects. A root must zero both quadratures at the
// same g (within 1e-6); quadratures that vanish identically along the scan
// are exempt. Returns the smallest such g, or nothing.
std::optional<double> zero_crossing(const OscillatorParams& p, Qubit which, double g_lo,
                                    double g_hi, ZeroCrossingScan* diag = nullptr);

// ---------------------------------------------------------------------------
// bath-parameter existence map
// ---------------------------------------------------------------------------

struct ExistenceCell {
    std::optional<double> g0_a;
    std::optional<double> g0_b;
};

// zero_crossing per qubit on the (w_a, w_b) grid with gamma_j = 1 - w_j
// (unit total rates); base supplies detunings, drive and dephasing.
std::vector<std::vector<ExistenceCell>> existence_map(const std::vector<double>& w_a_grid,
                                                      const std::vector<double>& w_b_grid,
                                                      const OscillatorParams& base,
                                                      double g_lo = 1e-2, double g_hi = 10.0);

// ---------------------------------------------------------------------------
// detuning restoration
// ---------------------------------------------------------------------------

struct DetuningRestore {
    double delta_q = 0.0;
    double g0 = 0.0;
};

// For fixed drive detuning p.delta_d, finds the qubit-qubit detuning and
// coupling at which qubit A's first-order coherence vanishes in both
// quadratures: coarse grid seed, then damped Newton on the 2x2 system.
std::optional<DetuningRestore> restore_detuning(const OscillatorParams& p, double dq_lo = -5.0,
                                                double dq_hi = 5.0, double g_lo = 1e-2,
                                                double g_hi = 10.0);

// ---------------------------------------------------------------------------
// enhancement-ratio extrema
// ---------------------------------------------------------------------------

struct RMaxResult {
    double g_star = 0.0;     // argmax of R(g)
    double r_max = 0.0;      // max over the scan, +inf when omega_0 vanishes
    double omega_max = 0.0;  // max over g of the synchronization measure
    double g_dip = 0.0;      // argmin of R(g)
    double r_min = 0.0;
    double omega_0 = 0.0;    // measure of the uncoupled system
    bool infinite = false;
};

// Scans R(g) = Omega(g)/Omega(0) from full numerics on n_scan points over
// [g_lo, g_hi], then refines both extrema by golden-section search.
RMaxResult r_max(const OscillatorParams& p, double g_lo, double g_hi, int n_scan = 200);

}  // namespace qsync
