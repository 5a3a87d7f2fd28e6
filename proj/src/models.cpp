#include "qsync/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qsync/operators.hpp"

namespace qsync {

// ---------------------------------------------------------------------------
// two-qudit oscillator
// ---------------------------------------------------------------------------

void OscillatorParams::validate() const {
    if (w_a < 0.0 || w_b < 0.0 || gamma_a < 0.0 || gamma_b < 0.0 || gamma_phi < 0.0)
        throw std::invalid_argument("oscillator: rates must be non-negative");
    if (!(gamma_total_a() > 0.0) || !(gamma_total_b() > 0.0))
        throw std::invalid_argument("oscillator: each qudit needs a positive total rate");
}

LindbladModel build_two_qudit(const OscillatorParams& p) {
    p.validate();
    const int d = p.s.dim();
    const HilbertLayout layout{{d, d}};

    const Matrix sp_a = ops::embed(ops::spin_raise(p.s), 0, layout);
    const Matrix sm_a = ops::embed(ops::spin_lower(p.s), 0, layout);
    const Matrix sz_a = ops::embed(ops::spin_z(p.s), 0, layout);
    const Matrix sp_b = ops::embed(ops::spin_raise(p.s), 1, layout);
    const Matrix sm_b = ops::embed(ops::spin_lower(p.s), 1, layout);
    const Matrix sz_b = ops::embed(ops::spin_z(p.s), 1, layout);

    LindbladModel m;
    m.layout = layout;
    m.h_static = p.delta_d * sz_a + (p.delta_d + p.delta_q) * sz_b +
                 0.5 * p.eps * (sp_a + sm_a) + 0.5 * p.g * (sp_a * sm_b + sm_a * sp_b);

    if (p.w_a > 0.0) m.jumps.push_back({std::sqrt(p.w_a) * sp_a});
    if (p.gamma_a > 0.0) m.jumps.push_back({std::sqrt(p.gamma_a) * sm_a});
    if (p.w_b > 0.0) m.jumps.push_back({std::sqrt(p.w_b) * sp_b});
    if (p.gamma_b > 0.0) m.jumps.push_back({std::sqrt(p.gamma_b) * sm_b});
    if (p.gamma_phi > 0.0) {
        m.jumps.push_back({std::sqrt(2.0 * p.gamma_phi) * sz_a});
        m.jumps.push_back({std::sqrt(2.0 * p.gamma_phi) * sz_b});
    }
    return m;
}

// ---------------------------------------------------------------------------
// collective spin basis
// ---------------------------------------------------------------------------

CollectiveBasis CollectiveBasis::standard() {
    const double r = 1.0 / std::sqrt(2.0);
    CollectiveBasis b;
    b.u = Vector::Zero(4);
    b.u(0) = 1.0;
    b.t = Vector::Zero(4);
    b.t(1) = r;
    b.t(2) = r;
    b.s = Vector::Zero(4);
    b.s(1) = r;
    b.s(2) = -r;
    b.d = Vector::Zero(4);
    b.d(3) = 1.0;
    return b;
}

CollectiveCoherences collective_coherences(const DensityMatrix& rho) {
    if (rho.dim() != 4)
        throw std::invalid_argument("collective_coherences: expected a two-qubit state");
    const CollectiveBasis b = CollectiveBasis::standard();
    auto elem = [&](const Vector& x, const Vector& y) {
        return (x.adjoint() * rho.rho * y)(0, 0);
    };
    return CollectiveCoherences{elem(b.t, b.u), elem(b.t, b.d), elem(b.s, b.u), elem(b.s, b.d)};
}

Matrix drive_in_collective_basis() {
    const CollectiveBasis b = CollectiveBasis::standard();
    const HilbertLayout layout{{2, 2}};
    const Matrix sp_a = ops::embed(ops::spin_raise(spin_half()), 0, layout);
    Matrix v(4, 4);
    v.col(0) = b.u;
    v.col(1) = b.t;
    v.col(2) = b.s;
    v.col(3) = b.d;
    return v.adjoint() * sp_a * v;
}

// ---------------------------------------------------------------------------
// circuit model
// ---------------------------------------------------------------------------

void CqedParams::validate() const {
    if (n_transmon < 2 || n_resonator < 2)
        throw std::invalid_argument("circuit: truncations must keep at least two levels");
    for (int j = 0; j < 2; ++j) {
        if (kappa[j] < 0.0 || gamma0[j] < 0.0 || gamma_phi[j] < 0.0)
            throw std::invalid_argument("circuit: rates must be non-negative");
    }
}

LindbladModel build_cqed(const CqedParams& p) {
    p.validate();
    const HilbertLayout layout{{p.n_transmon, p.n_resonator, p.n_transmon, p.n_resonator}};

    const Matrix b_local = ops::boson_ladder(p.n_transmon);
    const Matrix a_local = ops::boson_ladder(p.n_resonator);

    std::array<Matrix, 2> b, a;
    for (int j = 0; j < 2; ++j) {
        b[j] = ops::embed(b_local, 2 * j, layout);
        a[j] = ops::embed(a_local, 2 * j + 1, layout);
    }

    // Bare transmon and pump frequencies are lowered by the dressing shift so
    // the observable transitions of both qubits land on the nominal omega_q;
    // lowering the pump along with the transmon keeps the two-photon pump
    // resonance intact.
    std::array<double, 2> wq, wp;
    for (int j = 0; j < 2; ++j) {
        wq[j] = p.omega_q[j] - p.delta_corr[j];
        wp[j] = p.omega_p[j] - p.delta_corr[j];
    }
    const double omega_drive = p.omega_q[0];

    LindbladModel m;
    m.layout = layout;
    const int dim = layout.total();
    m.h_static = Matrix::Zero(dim, dim);

    for (int j = 0; j < 2; ++j) {
        const Matrix nb = b[j].adjoint() * b[j];
        const Matrix na = a[j].adjoint() * a[j];
        m.h_static += (wq[j] - wp[j]) * nb;
        m.h_static += 0.5 * p.alpha[j] * (nb - Matrix::Identity(dim, dim)) * nb;
        m.h_static += (p.omega_a[j] - wp[j]) * na;
        m.h_static += p.g_res[j] * (a[j] * b[j].adjoint() + a[j].adjoint() * b[j]);
        m.h_static += p.pump_rabi[j] * (b[j].adjoint() + b[j]);
    }

    if (p.g_ab != 0.0) {
        const double dp = wp[0] - wp[1];
        const Matrix hop = b[0].adjoint() * b[1];
        if (dp == 0.0) {
            m.h_static += p.g_ab * (hop + hop.adjoint());
        } else {
            m.h_dynamic.push_back({hop, [g = p.g_ab, dp](double t) {
                                       return g * std::exp(Complex(0.0, dp * t));
                                   }});
            m.h_dynamic.push_back({hop.adjoint().eval(), [g = p.g_ab, dp](double t) {
                                       return g * std::exp(Complex(0.0, -dp * t));
                                   }});
        }
    }

    if (p.eps != 0.0) {
        const double nu = wp[0] - omega_drive;
        if (nu == 0.0) {
            m.h_static += p.eps * (b[0] + b[0].adjoint());
        } else {
            m.h_dynamic.push_back({b[0], [e = p.eps, nu](double t) {
                                       return e * std::exp(Complex(0.0, -nu * t));
                                   }});
            m.h_dynamic.push_back({b[0].adjoint().eval(), [e = p.eps, nu](double t) {
                                       return e * std::exp(Complex(0.0, nu * t));
                                   }});
        }
    }

    for (int j = 0; j < 2; ++j) {
        if (p.kappa[j] > 0.0) m.jumps.push_back({std::sqrt(p.kappa[j]) * a[j]});
        if (p.gamma0[j] > 0.0) m.jumps.push_back({std::sqrt(p.gamma0[j]) * b[j]});
        if (p.gamma_phi[j] > 0.0)
            m.jumps.push_back({std::sqrt(p.gamma_phi[j]) * (b[j].adjoint() * b[j])});
    }
    return m;
}

LindbladModel build_cqed_unit(const CqedParams& p, Qubit which) {
    p.validate();
    const int j = which == Qubit::A ? 0 : 1;
    const HilbertLayout layout{{p.n_transmon, p.n_resonator}};

    const Matrix b = ops::embed(ops::boson_ladder(p.n_transmon), 0, layout);
    const Matrix a = ops::embed(ops::boson_ladder(p.n_resonator), 1, layout);

    const double wq = p.omega_q[j] - p.delta_corr[j];
    const double wp = p.omega_p[j] - p.delta_corr[j];

    LindbladModel m;
    m.layout = layout;
    const int dim = layout.total();
    const Matrix nb = b.adjoint() * b;
    m.h_static = (wq - wp) * nb + 0.5 * p.alpha[j] * (nb - Matrix::Identity(dim, dim)) * nb +
                 (p.omega_a[j] - wp) * (a.adjoint() * a) +
                 p.g_res[j] * (a * b.adjoint() + a.adjoint() * b) +
                 p.pump_rabi[j] * (b.adjoint() + b);

    if (p.kappa[j] > 0.0) m.jumps.push_back({std::sqrt(p.kappa[j]) * a});
    if (p.gamma0[j] > 0.0) m.jumps.push_back({std::sqrt(p.gamma0[j]) * b});
    if (p.gamma_phi[j] > 0.0) m.jumps.push_back({std::sqrt(p.gamma_phi[j]) * (b.adjoint() * b)});
    return m;
}

std::array<double, 2> cqed_demod_frequencies(const CqedParams& p) {
    const double omega_drive = p.omega_q[0];
    return {omega_drive - (p.omega_p[0] - p.delta_corr[0]),
            omega_drive - (p.omega_p[1] - p.delta_corr[1])};
}

}  // namespace qsync
