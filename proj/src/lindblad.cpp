#include "qsync/lindblad.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qsync/errors.hpp"

namespace qsync {

namespace {

using SpMat = Eigen::SparseMatrix<Complex>;

// ---------------------------------------------------------------------------
// small helpers
// ---------------------------------------------------------------------------

Eigen::Map<const Vector> vec_view(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, int d) {
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

Matrix hermitized(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

SpMat to_sparse(const Matrix& m) {
    std::vector<Eigen::Triplet<Complex>> trip;
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i < m.rows(); ++i)
            if (m(i, j) != Complex(0.0, 0.0)) trip.emplace_back(i, j, m(i, j));
    SpMat s(m.rows(), m.cols());
    s.setFromTriplets(trip.begin(), trip.end());
    s.makeCompressed();
    return s;
}

void check_square(const Matrix& m, int d, const char* what) {
    if (m.rows() != d || m.cols() != d)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(d) + "x" +
                                    std::to_string(d) + ", got " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()));
}

}  // namespace

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

Matrix LindbladModel::hamiltonian(double t) const {
    Matrix h = h_static;
    for (const auto& term : h_dynamic) h += term.coeff(t) * term.op;
    return h;
}

void LindbladModel::validate() const {
    const int d = dim();
    if (d < 1 || h_static.cols() != h_static.rows())
        throw std::invalid_argument("model: static Hamiltonian must be square and non-empty");
    if (layout.total() != d)
        throw std::invalid_argument("model: layout dimension " + std::to_string(layout.total()) +
                                    " does not match operator dimension " + std::to_string(d));
    for (const auto& term : h_dynamic) {
        check_square(term.op, d, "model: dynamic Hamiltonian term");
        if (!term.coeff) throw std::invalid_argument("model: dynamic term has empty coefficient");
    }
    for (const auto& jump : jumps) check_square(jump.op, d, "model: jump operator");

    // Probe H(t) at a few incommensurate times; dynamic terms must pair up so
    // the total stays Hermitian even when individual coefficients are complex.
    for (double t : {0.0, 0.785398163397448, 2.23606797749979}) {
        const Matrix h = hamiltonian(t);
        const double scale = std::max(1.0, h.norm());
        if ((h - h.adjoint()).norm() > 1e-12 * scale)
            throw std::invalid_argument("model: Hamiltonian is not Hermitian at t=" +
                                        std::to_string(t));
        if (h_dynamic.empty()) break;
    }
}

void DensityMatrix::validate(double herm_tol, double trace_tol, double eig_floor) const {
    const int d = dim();
    if (d < 1 || rho.cols() != rho.rows())
        throw std::invalid_argument("state: density matrix must be square and non-empty");
    if (layout.total() != d)
        throw std::invalid_argument("state: layout does not match matrix dimension");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
        throw std::invalid_argument("state: density matrix is not Hermitian");
    if (std::abs(rho.trace() - Complex(1.0, 0.0)) > trace_tol)
        throw std::invalid_argument("state: trace deviates from one");
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitized(rho), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < eig_floor)
        throw std::invalid_argument("state: negative eigenvalue " +
                                    std::to_string(es.eigenvalues().minCoeff()));
}

// ---------------------------------------------------------------------------
// superoperator
// ---------------------------------------------------------------------------

Superoperator liouvillian(const LindbladModel& model, double t) {
    model.validate();
    const int d = model.dim();
    const Matrix eye = Matrix::Identity(d, d);
    const Matrix h = model.hamiltonian(t);

    Matrix l = Matrix::Zero(d * d, d * d);
    l += Complex(0.0, -1.0) *
         (Eigen::kroneckerProduct(eye, h).eval() -
          Eigen::kroneckerProduct(h.transpose(), eye).eval());
    for (const auto& jump : model.jumps) {
        const Matrix& o = jump.op;
        const Matrix odo = o.adjoint() * o;
        l += Eigen::kroneckerProduct(o.conjugate(), o).eval();
        l -= 0.5 * Eigen::kroneckerProduct(eye, odo).eval();
        l -= 0.5 * Eigen::kroneckerProduct(odo.transpose(), eye).eval();
    }
    return Superoperator{std::move(l)};
}

Superoperator liouvillian(const LindbladModel& model) {
    if (model.time_dependent())
        throw std::invalid_argument(
            "liouvillian: model is time-dependent, pass an explicit time");
    return liouvillian(model, 0.0);
}

// ---------------------------------------------------------------------------
// steady state
// ---------------------------------------------------------------------------

DensityMatrix steady_state(const LindbladModel& model) {
    model.validate();
    if (model.time_dependent())
        throw std::invalid_argument(
            "steady_state: model is time-dependent, use evolve instead");

    const int d = model.dim();
    const int d2 = d * d;
    const Superoperator gen = liouvillian(model);
    const double gen_scale = gen.mat.norm();
    const double resid_tol = 1e-10 * std::max(gen_scale, 1e-300);

    auto finish = [&](Matrix rho) -> DensityMatrix {
        rho = hermitized(rho);
        const double tr = rho.trace().real();
        if (std::abs(tr) < 1e-300) throw std::runtime_error("steady_state: traceless null vector");
        rho /= tr;
        const double resid = (gen.mat * vec_view(rho)).norm();
        if (!std::isfinite(resid) || resid > resid_tol)
            throw std::runtime_error("steady_state: residual " + std::to_string(resid) +
                                     " exceeds tolerance");
        return DensityMatrix{std::move(rho), model.layout};
    };

    // Primary path: replace one row with the trace constraint and solve by a
    // rank-revealing LU. A plain solve is not enough, a degenerate nullspace
    // can still produce a small residual while the answer is arbitrary.
    Matrix constrained = gen.mat;
    constrained.row(0).setZero();
    for (int i = 0; i < d; ++i) constrained(0, i * d + i) = 1.0;
    Vector rhs = Vector::Zero(d2);
    rhs(0) = 1.0;
    Eigen::FullPivLU<Matrix> lu(constrained);
    lu.setThreshold(1e-12);

    if (lu.rank() == d2) {
        const Vector x = lu.solve(rhs);
        if (x.allFinite()) {
            Matrix rho = hermitized(unvec(x, d));
            const double tr = rho.trace().real();
            if (std::abs(tr) > 1e-12) {
                rho /= tr;
                const double resid = (gen.mat * vec_view(rho)).norm();
                if (std::isfinite(resid) && resid <= resid_tol)
                    return DensityMatrix{std::move(rho), model.layout};
            }
        }
    }

    // Fallback: SVD of the full generator, which counts the nullspace
    // dimension and extracts the null vector when it is unique.
    Eigen::BDCSVD<Matrix> svd(gen.mat, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double s_max = sv(0);
    int nullity = 0;
    if (s_max <= 0.0) {
        nullity = d2;
    } else {
        for (int i = 0; i < d2; ++i)
            if (sv(i) < 1e-10 * s_max) ++nullity;
    }
    if (nullity >= 2) throw MultiplicityError(nullity);
    if (nullity == 0)
        throw std::runtime_error("steady_state: generator has no nullspace within tolerance");

    Matrix rho = unvec(svd.matrixV().col(d2 - 1), d);
    const Complex tr = rho.trace();
    if (std::abs(tr) < 1e-12 * rho.norm())
        throw std::runtime_error("steady_state: null vector is traceless");
    rho /= tr;
    return finish(std::move(rho));
}

// ---------------------------------------------------------------------------
// time evolution
// ---------------------------------------------------------------------------

namespace {

// Right-hand side of the master equation in matrix form,
//   drho = -i(H rho - rho H) + sum_j [O rho O" - 1/2(P rho + rho P)],
// with P = sum_j O"O presummed. Operators are applied sparsely above a
// dimension threshold; embedded few-body operators are mostly zeros there.
constexpr int kSparseDim = 12;

struct MasterRhs {
    bool sparse = false;
    const std::vector<TimeTerm>* dyn = nullptr;

    Matrix h0;
    std::vector<Matrix> dyn_ops;
    std::vector<Matrix> jop, jdag;
    Matrix psum;

    SpMat h0_s;
    std::vector<SpMat> dyn_ops_s;
    std::vector<SpMat> jop_s, jdag_s;
    SpMat psum_s;

    Matrix t1, t2;

    void init(const LindbladModel& model) {
        const int d = model.dim();
        sparse = d >= kSparseDim;
        dyn = &model.h_dynamic;
        Matrix p = Matrix::Zero(d, d);
        for (const auto& jump : model.jumps) p += jump.op.adjoint() * jump.op;
        if (sparse) {
            h0_s = to_sparse(model.h_static);
            psum_s = to_sparse(p);
            for (const auto& term : model.h_dynamic) dyn_ops_s.push_back(to_sparse(term.op));
            for (const auto& jump : model.jumps) {
                jop_s.push_back(to_sparse(jump.op));
                jdag_s.push_back(to_sparse(jump.op.adjoint().eval()));
            }
        } else {
            h0 = model.h_static;
            psum = p;
            for (const auto& term : model.h_dynamic) dyn_ops.push_back(term.op);
            for (const auto& jump : model.jumps) {
                jop.push_back(jump.op);
                jdag.push_back(jump.op.adjoint());
            }
        }
        t1.resize(d, d);
        t2.resize(d, d);
    }

    void apply(double t, const Matrix& rho, Matrix& out) {
        if (sparse) {
            t1.noalias() = h0_s * rho;
            t1.noalias() -= rho * h0_s;
            for (size_t k = 0; k < dyn_ops_s.size(); ++k) {
                const Complex c = (*dyn)[k].coeff(t);
                t2.noalias() = dyn_ops_s[k] * rho;
                t1.noalias() += c * t2;
                t2.noalias() = rho * dyn_ops_s[k];
                t1.noalias() -= c * t2;
            }
            out = Complex(0.0, -1.0) * t1;
            t2.noalias() = psum_s * rho;
            out.noalias() -= 0.5 * t2;
            t2.noalias() = rho * psum_s;
            out.noalias() -= 0.5 * t2;
            for (size_t j = 0; j < jop_s.size(); ++j) {
                t1.noalias() = jop_s[j] * rho;
                out.noalias() += t1 * jdag_s[j];
            }
        } else {
            t1.noalias() = h0 * rho;
            t1.noalias() -= rho * h0;
            for (size_t k = 0; k < dyn_ops.size(); ++k) {
                const Complex c = (*dyn)[k].coeff(t);
                t1.noalias() += c * (dyn_ops[k] * rho);
                t1.noalias() -= c * (rho * dyn_ops[k]);
            }
            out = Complex(0.0, -1.0) * t1;
            out.noalias() -= 0.5 * (psum * rho);
            out.noalias() -= 0.5 * (rho * psum);
            for (size_t j = 0; j < jop.size(); ++j) {
                t1.noalias() = jop[j] * rho;
                out.noalias() += t1 * jdag[j];
            }
        }
    }
};

// Dormand-Prince 5(4) coefficients.
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

double scaled_error(const Matrix& y0, const Matrix& y1, const Matrix& err, double atol,
                    double rtol) {
    const Eigen::Index n = y0.size();
    double acc = 0.0;
    const Complex* p0 = y0.data();
    const Complex* p1 = y1.data();
    const Complex* pe = err.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::abs(p0[i]), std::abs(p1[i]));
        const double r = std::abs(pe[i]) / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

std::vector<DensityMatrix> evolve(const LindbladModel& model, const DensityMatrix& rho0,
                                  const std::vector<double>& t_grid, double rel_tol,
                                  double abs_tol) {
    model.validate();
    if (rho0.dim() != model.dim())
        throw std::invalid_argument("evolve: state dimension does not match model");
    if (t_grid.empty()) throw std::invalid_argument("evolve: empty time grid");
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("evolve: time grid must be strictly increasing");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw std::invalid_argument("evolve: tolerances must be positive");

    MasterRhs rhs;
    rhs.init(model);

    Matrix y = hermitized(rho0.rho);
    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    out.push_back(DensityMatrix{y, model.layout});
    if (t_grid.size() == 1) return out;

    const double span = t_grid.back() - t_grid.front();
    const double h_min = span * 1e-14;
    const int d = model.dim();

    Matrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), k5(d, d), k6(d, d), k7(d, d);
    Matrix ytmp(d, d), ynew(d, d), yerr(d, d);

    double t = t_grid.front();
    rhs.apply(t, y, k1);

    // Initial step from the ratio of scaled state and derivative norms.
    double h;
    {
        const double d0 = scaled_error(y, y, y, abs_tol, rel_tol);
        const double d1 = scaled_error(y, y, k1, abs_tol, rel_tol);
        h = (d0 > 1e-30 && d1 > 1e-30) ? 0.01 * d0 / d1 : span / 1000.0;
        h = std::min(h, span);
    }

    double err_prev = 1e-4;
    for (size_t g = 1; g < t_grid.size(); ++g) {
        const double tg = t_grid[g];
        rhs.apply(t, y, k1);
        while (tg - t > 0.0) {
            const bool clamped = (tg - t) <= h;
            const double hs = clamped ? (tg - t) : h;
            if (!clamped && (hs < h_min || t + hs == t)) throw StiffnessError(t, hs);

            ytmp = y + (hs * kA21) * k1;
            rhs.apply(t + kC2 * hs, ytmp, k2);
            ytmp = y + hs * (kA31 * k1 + kA32 * k2);
            rhs.apply(t + kC3 * hs, ytmp, k3);
            ytmp = y + hs * (kA41 * k1 + kA42 * k2 + kA43 * k3);
            rhs.apply(t + kC4 * hs, ytmp, k4);
            ytmp = y + hs * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4);
            rhs.apply(t + kC5 * hs, ytmp, k5);
            ytmp = y + hs * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
            rhs.apply(t + hs, ytmp, k6);
            ynew = y + hs * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
            rhs.apply(t + hs, ynew, k7);
            yerr = hs * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

            const double err = scaled_error(y, ynew, yerr, abs_tol, rel_tol);
            if (err <= 1.0) {
                t = clamped ? tg : t + hs;
                y.swap(ynew);
                k1.swap(k7);
                const double fac =
                    (err <= 1e-30)
                        ? 5.0
                        : std::clamp(0.9 * std::pow(err, -0.17) * std::pow(err_prev, 0.04), 0.2,
                                     5.0);
                if (!clamped) h = hs * fac;
                err_prev = std::max(err, 1e-30);
            } else {
                const double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
                h = hs * fac;
            }
        }
        out.push_back(DensityMatrix{hermitized(y), model.layout});
        y = out.back().rho;
    }
    return out;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
    const auto& dims = rho.layout.dims;
    const int nf = rho.layout.n_factors();
    if (keep.empty()) throw std::invalid_argument("partial_trace: no factors kept");
    for (size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] < 0 || keep[i] >= nf)
            throw std::invalid_argument("partial_trace: factor index out of range");
        if (i > 0 && keep[i] <= keep[i - 1])
            throw std::invalid_argument("partial_trace: factor indices must be strictly ascending");
    }

    std::vector<int> strides(nf, 1);
    for (int f = nf - 2; f >= 0; --f) strides[f] = strides[f + 1] * dims[f + 1];

    std::vector<int> comp;
    for (int f = 0; f < nf; ++f)
        if (std::find(keep.begin(), keep.end(), f) == keep.end()) comp.push_back(f);

    auto offsets_of = [&](const std::vector<int>& factors) {
        int count = 1;
        for (int f : factors) count *= dims[f];
        std::vector<int> off(count, 0);
        for (int idx = 0; idx < count; ++idx) {
            int rem = idx;
            for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
                off[idx] += (rem % dims[*it]) * strides[*it];
                rem /= dims[*it];
            }
        }
        return off;
    };

    const std::vector<int> off_k = offsets_of(keep);
    const std::vector<int> off_c = offsets_of(comp);
    const int dk = static_cast<int>(off_k.size());

    Matrix reduced = Matrix::Zero(dk, dk);
    for (int i = 0; i < dk; ++i)
        for (int j = 0; j < dk; ++j) {
            Complex acc(0.0, 0.0);
            for (int c : off_c) acc += rho.rho(off_k[i] + c, off_k[j] + c);
            reduced(i, j) = acc;
        }

    HilbertLayout layout;
    for (int f : keep) layout.dims.push_back(dims[f]);
    return DensityMatrix{std::move(reduced), std::move(layout)};
}

Complex expectation(const DensityMatrix& rho, const Matrix& op) {
    if (op.rows() != rho.dim() || op.cols() != rho.dim())
        throw std::invalid_argument("expectation: operator dimension does not match state");
    return op.transpose().cwiseProduct(rho.rho).sum();
}

}  // namespace qsync
