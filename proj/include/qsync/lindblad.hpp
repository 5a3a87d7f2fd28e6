#pragma once

#include <functional>
#include <vector>

#include "qsync/types.hpp"

namespace qsync {

// Jump operator with the rate absorbed: op = sqrt(rate) * bare operator.
struct JumpTerm {
    Matrix op;
};

// One explicitly time-dependent Hamiltonian term, contributing coeff(t) * op.
// Terms must come in Hermitian-conjugate pairs so H(t) stays Hermitian.
struct TimeTerm {
    Matrix op;
    std::function<Complex(double)> coeff;
};

struct LindbladModel {
    Matrix h_static;
    std::vector<TimeTerm> h_dynamic;
    std::vector<JumpTerm> jumps;
    HilbertLayout layout;

    int dim() const { return static_cast<int>(h_static.rows()); }
    bool time_dependent() const { return !h_dynamic.empty(); }
    Matrix hamiltonian(double t) const;

    // Checks Hermiticity of H(t) and dimension consistency; throws on violation.
    void validate() const;
};

struct DensityMatrix {
    Matrix rho;
    HilbertLayout layout;

    int dim() const { return static_cast<int>(rho.rows()); }
    void validate(double herm_tol = 1e-10, double trace_tol = 1e-10,
                  double eig_floor = -1e-8) const;
};

// Matrix acting on column-stacked vec(rho).
struct Superoperator {
    Matrix mat;
};

// L = -i(I(x)H - H^T(x)I) + sum_j [conj(O)(x)O - 1/2 I(x)O"O - 1/2 (O"O)^T(x)I]
// under the column-stacking convention vec(ABC) = (C^T (x) A) vec(B).
Superoperator liouvillian(const LindbladModel& model);
Superoperator liouvillian(const LindbladModel& model, double t);

// Unique null vector of the Liouvillian, trace-normalized and Hermitized.
// Dense LU with the first row replaced by the trace constraint; SVD fallback
// detects nullspace multiplicity.
DensityMatrix steady_state(const LindbladModel& model);

// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) integration of the
// master equation. Returns the state at each grid time; output states are
// Hermitized. rho0 is the state at t_grid.front().
std::vector<DensityMatrix> evolve(const LindbladModel& model, const DensityMatrix& rho0,
                                  const std::vector<double>& t_grid, double rel_tol = 1e-8,
                                  double abs_tol = 1e-10);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

Complex expectation(const DensityMatrix& rho, const Matrix& op);

}  // namespace qsync
