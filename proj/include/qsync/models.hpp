#pragma once

#include <array>

#include "qsync/lindblad.hpp"
#include "qsync/types.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// driven two-qudit oscillator
// ---------------------------------------------------------------------------

// Frequencies are in units of the total relaxation rate of one qudit unless
// the caller decides otherwise; the builder never rescales.
struct OscillatorParams {
    SpinValue s = spin_half();
    double delta_d = 0.0;   // detuning of qudit A from the drive
    double delta_q = 0.0;   // detuning of qudit B from qudit A
    double eps = 0.0;       // drive amplitude on qudit A
    double g = 0.0;         // exchange coupling
    double w_a = 0.0;       // gain rates
    double w_b = 0.0;
    double gamma_a = 0.0;   // loss rates
    double gamma_b = 0.0;
    double gamma_phi = 0.0; // dephasing rate, both qudits

    double gamma_total_a() const { return gamma_a + w_a; }
    double gamma_total_b() const { return gamma_b + w_b; }
    void validate() const;
};

// H = delta_d Sz_A + (delta_d + delta_q) Sz_B + (eps/2)(S+_A + S-_A)
//     + (g/2)(S+_A S-_B + S-_A S+_B),
// with gain sqrt(w_j) S+_j, loss sqrt(gamma_j) S-_j and dephasing
// sqrt(2 gamma_phi) Sz_j jump operators.
LindbladModel build_two_qudit(const OscillatorParams& p);

// ---------------------------------------------------------------------------
// collective spin basis of two qubits
// ---------------------------------------------------------------------------

// |U> = |up,up>, |T> and |S> are the symmetric and antisymmetric combinations
// of |up,down> and |down,up>, |D> = |down,down>.
struct CollectiveBasis {
    Vector u, t, s, d;
    static CollectiveBasis standard();
};

struct CollectiveCoherences {
    Complex c_tu, c_td, c_su, c_sd;
};

// Matrix elements <X|rho|Y> for the transitions the drive connects.
CollectiveCoherences collective_coherences(const DensityMatrix& rho);

// S+_A of the first qubit expressed in the (U, T, S, D) ordered basis; it
// couples exactly the four transitions U-T, U-S, T-D, S-D with weight 1/sqrt2.
Matrix drive_in_collective_basis();

// ---------------------------------------------------------------------------
// circuit realization: two pumped transmons with auxiliary resonators
// ---------------------------------------------------------------------------

// Index 0 refers to unit A, index 1 to unit B. All frequencies and rates are
// angular (rad/s). alpha is the signed anharmonicity (negative for
// transmons). delta_corr holds the dressing-induced shifts of the qubit
// transitions; the builder lowers the bare transmon and pump frequencies by
// delta_corr so the dressed transitions of both qubits sit at the nominal
// omega_q, mutually resonant, and applies the external drive at that nominal
// frequency.
struct CqedParams {
    std::array<double, 2> omega_q{};     // bare transmon frequencies (nominal)
    std::array<double, 2> omega_a{};     // resonator frequencies
    std::array<double, 2> omega_p{};     // pump frequencies
    std::array<double, 2> alpha{};       // anharmonicities (signed)
    std::array<double, 2> g_res{};       // transmon-resonator couplings
    double g_ab = 0.0;                   // transmon-transmon coupling
    std::array<double, 2> pump_rabi{};   // two-photon pump amplitudes
    double eps = 0.0;                    // external drive on transmon A
    std::array<double, 2> kappa{};       // resonator decay rates
    std::array<double, 2> gamma0{};      // transmon decay rates
    std::array<double, 2> gamma_phi{};   // transmon dephasing rates
    std::array<double, 2> delta_corr{};  // frequency compensation shifts
    int n_transmon = 3;
    int n_resonator = 3;

    void validate() const;
};

// Pump-frame model on transmon A x resonator A x transmon B x resonator B.
// Per unit: (omega_q - omega_p) b"b + (alpha/2)(b"b - 1)b"b,
// (omega_a - omega_p) a"a, g_res(a b" + a" b), pump_rabi(b" + b); between
// units g_ab(b_A" b_B e^{i(omega_pA - omega_pB)t} + h.c.); drive
// eps(b_A e^{-i(omega_pA - omega_drive)t} + h.c.). Jumps sqrt(kappa) a,
// sqrt(gamma0) b, sqrt(gamma_phi) b"b. Oscillating factors with exactly zero
// frequency are folded into the static Hamiltonian.
LindbladModel build_cqed(const CqedParams& p);

// One transmon with its resonator, same per-unit terms and frame as
// build_cqed but without the inter-unit coupling and the external drive.
// The result is time independent. Used for rate extraction.
LindbladModel build_cqed_unit(const CqedParams& p, Qubit which);

// Demodulation frequencies of the drive-locked component of <b_j> in the
// pump frame: omega_drive minus the effective pump frequency of unit j.
std::array<double, 2> cqed_demod_frequencies(const CqedParams& p);

}  // namespace qsync
