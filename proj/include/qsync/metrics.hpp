#pragma once

#include <utility>
#include <vector>

#include "qsync/lindblad.hpp"
#include "qsync/models.hpp"
#include "qsync/types.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// phase-space distributions
// ---------------------------------------------------------------------------

// Q(theta, phi) = <theta,phi| rho |theta,phi> for a single spin-s state.
double husimi_q(const DensityMatrix& rho, SpinValue s, double theta, double phi);

// The same Q assembled from spherical-tensor expectation values and
// associated Legendre polynomials. Used as a structural cross-check.
double husimi_q_tensor_expansion(const DensityMatrix& rho, SpinValue s, double theta,
                                 double phi);

// Marginal phase distribution deviation of a qubit state,
// deltaP(phi) = (1/4) Re[<S+> exp(-i phi)].
double delta_p(const DensityMatrix& rho_qubit, double phi);

// deltaP sampled on a uniform grid over [0, 2*pi); returns (phi, deltaP) pairs.
std::vector<std::pair<double, double>> delta_p_curve(const DensityMatrix& rho_qubit,
                                                     int n_samples = 256);

// ---------------------------------------------------------------------------
// coherences and tensor expectations
// ---------------------------------------------------------------------------

struct PhaseLockResult {
    Complex coherence;  // <S+> of the reduced state
    double magnitude;   // |<S+>|
    double normalized;  // |<S+>| / eps, NaN when eps was not supplied
};

// Reduced single-qudit raising-operator expectation of a multi-qudit state.
// Pass the drive amplitude eps to populate the normalized field.
PhaseLockResult phase_locking(const DensityMatrix& rho_full, int which_qudit,
                              double eps = 0.0);

struct TensorExpectation {
    int k = 0;
    int q = 0;
    Complex value;
};

// <T_k^q> for every k <= 2s, |q| <= k, ordered by k then q ascending.
std::vector<TensorExpectation> tensor_expectations(const DensityMatrix& rho_qudit,
                                                   SpinValue s);

// ---------------------------------------------------------------------------
// entropies and synchronization measures
// ---------------------------------------------------------------------------

// -sum lambda ln(lambda), natural log. Eigenvalues in (-1e-8, 0] are clamped
// to zero; anything below -1e-8 raises std::invalid_argument.
double von_neumann_entropy(const DensityMatrix& rho);

// Sum of single-factor Sz operators, each factor of dim d treated as spin (d-1)/2.
Matrix total_sz_operator(const HilbertLayout& layout);

struct SyncResult {
    double omega = 0.0;       // S(rho_diag) - S(rho), in nats
    Matrix basis;             // columns: the dephasing basis
    double rho_diag_entropy = 0.0;
    double rho_entropy = 0.0;
};

// Relative entropy of synchronization: dephase rho_driven in the eigenbasis of
// rho_undriven and return the entropy gain. Degenerate eigenspaces of
// rho_undriven are split by diagonalizing the projected total Sz; ordering is
// by descending eigenvalue, then descending Sz.
SyncResult sync_measure(const DensityMatrix& rho_driven, const DensityMatrix& rho_undriven);

// Partially-coherent variant: minimize S(rho || sigma) over states sigma that
// are block-diagonal in the total-Sz charge sectors. The minimum is attained
// at the block-pinching of rho, so omega = S(pinch(rho)) - S(rho).
// rho_undriven must itself be block-diagonal to 1e-8 (StructureError otherwise).
SyncResult sync_measure_partial_from(const DensityMatrix& rho_driven,
                                     const DensityMatrix& rho_undriven,
                                     const Matrix& charge);

// Convenience: derive rho_undriven from the undriven model's steady state and
// the charge operator from its layout.
SyncResult sync_measure_partial(const DensityMatrix& rho_driven,
                                const LindbladModel& undriven_model);

// Derivative-free cross-check of the pinching optimum: Nelder-Mead over
// block-structured sigma, returning min S(rho || sigma).
double relative_entropy_block_min_numeric(const DensityMatrix& rho, const Matrix& charge,
                                          int max_iter = 4000);

// ---------------------------------------------------------------------------
// enhancement ratio
// ---------------------------------------------------------------------------

struct RatioResult {
    double value = 0.0;   // omega_g / omega_0; +inf when the infinite flag is set
    bool infinite = false;
    double omega_g = 0.0;
    double omega_0 = 0.0;
};

// R(g): synchronization measure at coupling g over its value at g = 0,
// every other parameter held fixed. Flagged infinite when omega_0 <= 1e-14.
RatioResult ratio_r(const OscillatorParams& params, double g);

}  // namespace qsync
