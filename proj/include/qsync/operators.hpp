#pragma once

#include "qsync/types.hpp"

namespace qsync::ops {

// ---------------- spin ladder algebra ----------------
// Basis convention: |s,m> with m descending (m = s first), so spin_raise is
// strictly upper triangular.

Matrix spin_z(SpinValue s);
Matrix spin_raise(SpinValue s);
Matrix spin_lower(SpinValue s);

// Bosonic annihilation operator on n_levels Fock states |0..n-1> (ascending).
Matrix boson_ladder(int n_levels);

// op acting on one factor of a product space, identity elsewhere.
// Factor 0 is the leftmost (slowest-varying) Kronecker factor.
Matrix embed(const Matrix& op, int site, const HilbertLayout& layout);

// ---------------- irreducible tensor operators ----------------

// <j1 m1; j2 m2 | J M> with all arguments doubled (two_j = 2j etc.) so
// half-integer momenta stay exact. Condon-Shortley phase convention.
double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M);

// T_k^q normalized to Tr(T_k^q" T_k'^q') = delta_kk' delta_qq',
// built from Clebsch-Gordan coefficients. Requires 0 <= k <= 2s, |q| <= k.
Matrix spherical_tensor(SpinValue s, int k, int q);

// ---------------- phase-space ingredients ----------------

// SO(3) coherent state |theta,phi> = exp(i phi Sz) exp(i theta Sy) |s, m=s>.
Vector coherent_state(SpinValue s, double theta, double phi);

// Associated Legendre P_k^q(x) with Condon-Shortley phase, q >= 0, |x| <= 1.
double assoc_legendre(int k, int q, double x);

}  // namespace qsync::ops
