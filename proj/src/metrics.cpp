#include "qsync/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qsync/errors.hpp"
#include "qsync/operators.hpp"

namespace qsync {

namespace {

Matrix hermitized(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

// Associated Legendre without the Condon-Shortley phase, extended to negative
// order via P_k^{-q} = (-1)^q (k-q)!/(k+q)! P_k^q.
double legendre_plain(int k, int q, double x) {
    const int aq = std::abs(q);
    const double cs_undo = (aq % 2 == 0) ? 1.0 : -1.0;
    double p = cs_undo * ops::assoc_legendre(k, aq, x);
    if (q < 0) p *= cs_undo * factorial(k - aq) / factorial(k + aq);
    return p;
}

// -sum p ln(p) with the clamp policy for slightly negative weights.
double entropy_from_weights(const Eigen::VectorXd& w) {
    double sum = 0.0;
    for (int i = 0; i < w.size(); ++i) {
        const double p = w(i);
        if (p < -1e-8) throw std::invalid_argument("entropy: eigenvalue below -1e-8");
        if (p <= 0.0) continue;
        sum -= p * std::log(p);
    }
    return sum;
}

double entropy_of_matrix(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitized(m), Eigen::EigenvaluesOnly);
    return entropy_from_weights(es.eigenvalues());
}

// Assign each basis index to a charge sector; sectors share a diagonal value
// of the charge operator up to tolerance. The charge operator must be diagonal.
std::vector<int> charge_sectors(const Matrix& charge, int d) {
    if (charge.rows() != d || charge.cols() != d)
        throw std::invalid_argument("charge operator dimension mismatch");
    Matrix off = charge;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, charge.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("charge operator must be diagonal");

    std::vector<double> values;
    std::vector<int> sector(d);
    for (int i = 0; i < d; ++i) {
        const double c = charge(i, i).real();
        int found = -1;
        for (std::size_t v = 0; v < values.size(); ++v)
            if (std::abs(values[v] - c) <= 1e-9) found = static_cast<int>(v);
        if (found < 0) {
            found = static_cast<int>(values.size());
            values.push_back(c);
        }
        sector[i] = found;
    }
    return sector;
}

double clamp_omega(double raw) {
    if (raw < -1e-12)
        throw std::runtime_error("sync measure: dephasing decreased entropy; invalid input state");
    return std::max(raw, 0.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// phase-space distributions
// ---------------------------------------------------------------------------

double husimi_q(const DensityMatrix& rho, SpinValue s, double theta, double phi) {
    if (rho.dim() != s.dim()) throw std::invalid_argument("husimi_q: dimension mismatch");
    const Vector v = ops::coherent_state(s, theta, phi);
    return (v.adjoint() * rho.rho * v)(0).real();
}

double husimi_q_tensor_expansion(const DensityMatrix& rho, SpinValue s, double theta,
                                 double phi) {
    if (rho.dim() != s.dim())
        throw std::invalid_argument("husimi_q_tensor_expansion: dimension mismatch");
    const int ts = s.twice_s;
    const double x = std::cos(theta);
    const Complex iu(0.0, 1.0);

    Complex sum = 0.0;
    for (int k = 0; k <= ts; ++k) {
        for (int q = -k; q <= k; ++q) {
            const double c_kq = std::sqrt((2.0 * k + 1.0) * factorial(k - q) / factorial(k + q)) *
                                factorial(ts) /
                                std::sqrt(factorial(ts - k) * factorial(ts + k + 1));
            const Complex t_exp = expectation(rho, ops::spherical_tensor(s, k, -q));
            sum += c_kq * legendre_plain(k, q, x) * std::exp(iu * (q * phi)) * t_exp;
        }
    }
    return sum.real();
}

double delta_p(const DensityMatrix& rho_qubit, double phi) {
    if (rho_qubit.dim() != 2) throw std::invalid_argument("delta_p: qubit state required");
    const Complex sp = expectation(rho_qubit, ops::spin_raise(spin_half()));
    return 0.25 * (sp * std::exp(Complex(0.0, -phi))).real();
}

std::vector<std::pair<double, double>> delta_p_curve(const DensityMatrix& rho_qubit,
                                                     int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("delta_p_curve: n_samples must be >= 1");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double phi = 2.0 * pi * i / n_samples;
        curve.emplace_back(phi, delta_p(rho_qubit, phi));
    }
    return curve;
}

// ---------------------------------------------------------------------------
// coherences and tensor expectations
// ---------------------------------------------------------------------------

PhaseLockResult phase_locking(const DensityMatrix& rho_full, int which_qudit, double eps) {
    const DensityMatrix reduced = partial_trace(rho_full, {which_qudit});
    const SpinValue s = SpinValue::from_twice(reduced.dim() - 1);
    const Complex coh = expectation(reduced, ops::spin_raise(s));
    const double mag = std::abs(coh);
    const double norm = eps > 0.0 ? mag / eps : std::numeric_limits<double>::quiet_NaN();
    return PhaseLockResult{coh, mag, norm};
}

std::vector<TensorExpectation> tensor_expectations(const DensityMatrix& rho_qudit, SpinValue s) {
    if (rho_qudit.dim() != s.dim())
        throw std::invalid_argument("tensor_expectations: dimension mismatch");
    std::vector<TensorExpectation> table;
    for (int k = 0; k <= s.twice_s; ++k)
        for (int q = -k; q <= k; ++q)
            table.push_back({k, q, expectation(rho_qudit, ops::spherical_tensor(s, k, q))});
    return table;
}

// ---------------------------------------------------------------------------
// entropies and synchronization measures
// ---------------------------------------------------------------------------

double von_neumann_entropy(const DensityMatrix& rho) { return entropy_of_matrix(rho.rho); }

Matrix total_sz_operator(const HilbertLayout& layout) {
    const int d = layout.total();
    Matrix sz = Matrix::Zero(d, d);
    for (int f = 0; f < layout.n_factors(); ++f)
        sz += ops::embed(ops::spin_z(SpinValue::from_twice(layout.dims[f] - 1)), f, layout);
    return sz;
}

SyncResult sync_measure(const DensityMatrix& rho_driven, const DensityMatrix& rho_undriven) {
    const int d = rho_undriven.dim();
    if (rho_driven.dim() != d) throw std::invalid_argument("sync_measure: dimension mismatch");

    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitized(rho_undriven.rho));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sync_measure: eigendecomposition failed");

    // descending eigenvalue order
    Eigen::VectorXd lam(d);
    Matrix basis(d, d);
    for (int i = 0; i < d; ++i) {
        lam(i) = es.eigenvalues()(d - 1 - i);
        basis.col(i) = es.eigenvectors().col(d - 1 - i);
    }

    // split degenerate clusters by the projected total Sz, descending within
    const Matrix sz = total_sz_operator(rho_undriven.layout);
    const double tol = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    int start = 0;
    while (start < d) {
        int end = start + 1;
        while (end < d && lam(end - 1) - lam(end) <= tol) ++end;
        const int n = end - start;
        if (n > 1) {
            const Matrix w = basis.middleCols(start, n);
            Eigen::SelfAdjointEigenSolver<Matrix> sub(hermitized(w.adjoint() * sz * w));
            Matrix u(n, n);
            for (int i = 0; i < n; ++i) u.col(i) = sub.eigenvectors().col(n - 1 - i);
            basis.middleCols(start, n) = w * u;
        }
        start = end;
    }

    const Matrix rd = hermitized(rho_driven.rho);
    const Matrix in_basis = basis.adjoint() * rd * basis;
    const double s_diag = entropy_from_weights(in_basis.diagonal().real());
    const double s_rho = entropy_of_matrix(rd);

    SyncResult result;
    result.omega = clamp_omega(s_diag - s_rho);
    result.basis = basis;
    result.rho_diag_entropy = s_diag;
    result.rho_entropy = s_rho;
    return result;
}

SyncResult sync_measure_partial_from(const DensityMatrix& rho_driven,
                                     const DensityMatrix& rho_undriven, const Matrix& charge) {
    const int d = rho_undriven.dim();
    if (rho_driven.dim() != d)
        throw std::invalid_argument("sync_measure_partial: dimension mismatch");
    const std::vector<int> sector = charge_sectors(charge, d);

    double off_block = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (sector[i] != sector[j])
                off_block = std::max(off_block, std::abs(rho_undriven.rho(i, j)));
    if (off_block > 1e-8)
        throw StructureError("sync_measure_partial: undriven state not block-diagonal in "
                             "charge sectors (off-block element " +
                             std::to_string(off_block) + ")");

    const Matrix rd = hermitized(rho_driven.rho);
    Matrix pinched = rd;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (sector[i] != sector[j]) pinched(i, j) = 0.0;

    const double s_pinched = entropy_of_matrix(pinched);
    const double s_rho = entropy_of_matrix(rd);

    SyncResult result;
    result.omega = clamp_omega(s_pinched - s_rho);
    result.basis = Matrix::Identity(d, d);
    result.rho_diag_entropy = s_pinched;
    result.rho_entropy = s_rho;
    return result;
}

SyncResult sync_measure_partial(const DensityMatrix& rho_driven,
                                const LindbladModel& undriven_model) {
    const DensityMatrix rho_u = steady_state(undriven_model);
    return sync_measure_partial_from(rho_driven, rho_u, total_sz_operator(undriven_model.layout));
}

// ---------------------------------------------------------------------------
// numerical cross-check of the pinching optimum
// ---------------------------------------------------------------------------

namespace {

// Relative entropy S(rho || sigma) for sigma = exp(A)/Tr exp(A) with A the
// Hermitian block generator assembled from the parameter vector:
// f = -S(rho) - Tr(rho A) + ln Tr exp(A).
struct BlockObjective {
    const Matrix& rd;
    const std::vector<std::vector<int>>& blocks;
    double s_rho;

    int n_params() const {
        int n = 0;
        for (const auto& b : blocks) n += static_cast<int>(b.size() * b.size());
        return n;
    }

    double operator()(const Eigen::VectorXd& x) const {
        double tr_rho_a = 0.0;
        double lse_max = -std::numeric_limits<double>::infinity();
        std::vector<Eigen::VectorXd> block_eigs;

        int p = 0;
        for (const auto& idx : blocks) {
            const int n = static_cast<int>(idx.size());
            Matrix a = Matrix::Zero(n, n);
            for (int i = 0; i < n; ++i) a(i, i) = x(p++);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    a(i, j) = Complex(x(p), x(p + 1));
                    a(j, i) = std::conj(a(i, j));
                    p += 2;
                }

            Matrix rho_block(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) rho_block(i, j) = rd(idx[i], idx[j]);
            tr_rho_a += (rho_block * a).trace().real();

            Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
            block_eigs.push_back(es.eigenvalues());
            lse_max = std::max(lse_max, es.eigenvalues().maxCoeff());
        }

        double z = 0.0;
        for (const auto& e : block_eigs)
            for (int i = 0; i < e.size(); ++i) z += std::exp(e(i) - lse_max);
        return -s_rho - tr_rho_a + std::log(z) + lse_max;
    }
};

}  // namespace

double relative_entropy_block_min_numeric(const DensityMatrix& rho, const Matrix& charge,
                                          int max_iter) {
    const int d = rho.dim();
    const std::vector<int> sector = charge_sectors(charge, d);
    const int n_sectors = 1 + *std::max_element(sector.begin(), sector.end());
    std::vector<std::vector<int>> blocks(n_sectors);
    for (int i = 0; i < d; ++i) blocks[sector[i]].push_back(i);

    const Matrix rd = hermitized(rho.rho);
    const BlockObjective f{rd, blocks, entropy_of_matrix(rd)};
    const int n = f.n_params();

    // Nelder-Mead from the maximally mixed block state (A = 0)
    std::vector<Eigen::VectorXd> simplex(n + 1, Eigen::VectorXd::Zero(n));
    for (int i = 0; i < n; ++i) simplex[i + 1](i) = 0.5;
    std::vector<double> fv(n + 1);
    for (int i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

    std::vector<int> order(n + 1);
    for (int it = 0; it < max_iter; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = order[0], worst = order[n], second = order[n - 1];
        if (fv[worst] - fv[best] < 1e-13) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= n;

        const Eigen::VectorXd refl = centroid + (centroid - simplex[worst]);
        const double f_refl = f(refl);
        if (f_refl < fv[best]) {
            const Eigen::VectorXd expd = centroid + 2.0 * (centroid - simplex[worst]);
            const double f_expd = f(expd);
            if (f_expd < f_refl) {
                simplex[worst] = expd;
                fv[worst] = f_expd;
            } else {
                simplex[worst] = refl;
                fv[worst] = f_refl;
            }
        } else if (f_refl < fv[second]) {
            simplex[worst] = refl;
            fv[worst] = f_refl;
        } else {
            const Eigen::VectorXd contr =
                centroid + 0.5 * ((f_refl < fv[worst] ? refl : simplex[worst]) - centroid);
            const double f_contr = f(contr);
            if (f_contr < std::min(f_refl, fv[worst])) {
                simplex[worst] = contr;
                fv[worst] = f_contr;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    return *std::min_element(fv.begin(), fv.end());
}

// ---------------------------------------------------------------------------
// enhancement ratio
// ---------------------------------------------------------------------------

RatioResult ratio_r(const OscillatorParams& params, double g) {
    const auto omega_at = [&params](double gv) {
        OscillatorParams p = params;
        p.g = gv;
        const DensityMatrix driven = steady_state(build_two_qudit(p));
        OscillatorParams pu = p;
        pu.eps = 0.0;
        const DensityMatrix undriven = steady_state(build_two_qudit(pu));
        return sync_measure(driven, undriven).omega;
    };

    RatioResult r;
    r.omega_g = omega_at(g);
    r.omega_0 = omega_at(0.0);
    if (r.omega_0 <= 1e-14) {
        r.infinite = true;
        r.value = std::numeric_limits<double>::infinity();
    } else {
        r.value = r.omega_g / r.omega_0;
    }
    return r;
}

}  // namespace qsync
