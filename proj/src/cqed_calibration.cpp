#include "qsync/cqed_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "qsync/errors.hpp"

namespace qsync {

namespace {

constexpr Complex iu{0.0, 1.0};

Eigen::Matrix3cd pump_hamiltonian(double w, double alpha, double gf) {
    Eigen::Matrix3cd h;
    h << 0.0, w, 0.0, w, 0.5 * alpha, std::sqrt(2.0) * w, 0.0, std::sqrt(2.0) * w, -iu * gf;
    return h;
}

// Single-exponential least squares y ~= c + a exp(-rate t) with a damped
// Gauss-Newton refinement seeded by a log-linear regression on |y - y_end|.
struct ExpFit {
    double c, a, rate, rms;
};

double exp_fit_cost(const std::vector<double>& t, const std::vector<double>& y,
                    const Eigen::Vector3d& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = q(0) + q(1) * std::exp(-q(2) * t[i]) - y[i];
        s += r * r;
    }
    return s;
}

ExpFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y) {
    const int n = static_cast<int>(t.size());
    const double c0 = y.back();

    double dev_max = 0.0;
    for (int i = 0; i < n; ++i) dev_max = std::max(dev_max, std::abs(y[i] - c0));

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (int i = 0; i < n; ++i) {
        const double d = std::abs(y[i] - c0);
        if (d < 1e-3 * dev_max) continue;
        const double ly = std::log(d);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++m;
    }
    double rate0 = 1.0 / t.back();
    if (m >= 2) {
        const double den = m * sxx - sx * sx;
        if (den > 0.0) {
            const double slope = (m * sxy - sx * sy) / den;
            if (slope < 0.0 && std::isfinite(slope)) rate0 = -slope;
        }
    }

    Eigen::Vector3d q(c0, y.front() - c0, rate0);
    double cost = exp_fit_cost(t, y, q);
    double lambda = 1e-3;
    Eigen::MatrixXd jac(n, 3);
    Eigen::VectorXd res(n);
    for (int iter = 0; iter < 200; ++iter) {
        for (int i = 0; i < n; ++i) {
            const double e = std::exp(-q(2) * t[i]);
            jac(i, 0) = 1.0;
            jac(i, 1) = e;
            jac(i, 2) = -q(1) * t[i] * e;
            res(i) = q(0) + q(1) * e - y[i];
        }
        const Eigen::Matrix3d a = jac.transpose() * jac;
        const Eigen::Vector3d g = jac.transpose() * res;
        bool stepped = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::Matrix3d damped = a;
            for (int k = 0; k < 3; ++k) damped(k, k) += lambda * std::max(a(k, k), 1e-300);
            const Eigen::Vector3d step = damped.fullPivLu().solve(-g);
            const Eigen::Vector3d qn = q + step;
            const double cn = exp_fit_cost(t, y, qn);
            if (cn < cost) {
                q = qn;
                const bool tiny = step.norm() < 1e-12 * (1.0 + q.norm()) || cost - cn < 1e-30;
                cost = cn;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (tiny) iter = 200;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
        if (!stepped) break;
    }
    return ExpFit{q(0), q(1), q(2), std::sqrt(cost / n)};
}

Complex trailing_mean(const std::vector<Complex>& vals, double window_fraction) {
    const int n = static_cast<int>(vals.size());
    if (!(window_fraction > 0.0) || window_fraction > 1.0)
        throw std::invalid_argument("time_averaged_observable: window fraction must be in (0, 1]");
    const int w = std::max(4, static_cast<int>(std::lround(window_fraction * n)));
    if (w > n)
        throw std::invalid_argument("time_averaged_observable: trajectory shorter than the window");

    const int start = n - w;
    const int half = w / 2;
    Complex s1 = 0.0, s2 = 0.0;
    double peak = 0.0;
    for (int i = start; i < n; ++i) {
        (i < start + half ? s1 : s2) += vals[i];
        peak = std::max(peak, std::abs(vals[i]));
    }
    const Complex mean = (s1 + s2) / static_cast<double>(w);
    const Complex m1 = s1 / static_cast<double>(half);
    const Complex m2 = s2 / static_cast<double>(w - half);
    const double denom = std::max({std::abs(mean), 1e-15 * peak, 1e-300});
    const double drift = std::abs(m2 - m1) / denom;
    if (drift > 1e-4) throw ConvergenceError(drift);
    return mean;
}

// Aitken delta-squared extrapolation of three successive window means.
Complex aitken3(Complex m1, Complex m2, Complex m3) {
    const Complex d1 = m2 - m1, d2 = m3 - m2, dd = d1 - d2;
    if (std::abs(dd) < 1e-14 * std::max(std::abs(m3), 1e-300)) return m3;
    return m3 + d2 * d2 / dd;
}

}  // namespace

// ---------------------------------------------------------------------------
// frequency corrections
// ---------------------------------------------------------------------------

double dispersive_shift(double g, double omega_q, double omega_a) {
    if (omega_q == omega_a)
        throw std::invalid_argument("dispersive_shift: qubit-resonator detuning is zero");
    return g * g / (omega_q - omega_a);
}

double gamma_f(double g, double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("gamma_f: kappa must be positive");
    return 4.0 * g * g / kappa;
}

double pump_shift(double pump_rabi, double alpha, double gamma_f_rate, int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("pump_shift: need at least one step");
    if (pump_rabi == 0.0) return 0.0;

    Eigen::Matrix3cd vecs = Eigen::Matrix3cd::Identity();
    Eigen::Vector3cd vals(0.0, 0.5 * alpha, -iu * gamma_f_rate);
    for (int k = 1; k <= n_steps; ++k) {
        const double w = pump_rabi * k / n_steps;
        Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(pump_hamiltonian(w, alpha, gamma_f_rate));
        if (es.info() != Eigen::Success)
            throw std::runtime_error("pump_shift: eigensolver failed");

        bool used[3] = {false, false, false};
        Eigen::Matrix3cd next_vecs;
        Eigen::Vector3cd next_vals;
        for (int j = 0; j < 3; ++j) {
            int pick = -1;
            double best = -1.0;
            for (int i = 0; i < 3; ++i) {
                if (used[i]) continue;
                const double ov = std::abs(vecs.col(j).dot(es.eigenvectors().col(i)));
                if (ov > best) {
                    best = ov;
                    pick = i;
                }
            }
            if (best < 0.5) throw TrackingError(best);
            used[pick] = true;
            next_vecs.col(j) = es.eigenvectors().col(pick);
            next_vals(j) = es.eigenvalues()(pick);
        }
        vecs = next_vecs;
        vals = next_vals;
    }
    return (vals(1).real() - vals(0).real()) - 0.5 * alpha;
}

std::array<double, 2> calibrated_corrections(const CqedParams& p) {
    std::array<double, 2> out{};
    for (int j = 0; j < 2; ++j) {
        out[j] = dispersive_shift(p.g_res[j], p.omega_q[j], p.omega_a[j]) +
                 pump_shift(p.pump_rabi[j], std::abs(p.alpha[j]), gamma_f(p.g_res[j], p.kappa[j]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// rate extraction
// ---------------------------------------------------------------------------

RateFit extract_rates(const CqedParams& p, Qubit which, double t_max, int n_samples) {
    const int j = which == Qubit::A ? 0 : 1;
    if (n_samples < 16) throw std::invalid_argument("extract_rates: need at least 16 samples");
    if (t_max <= 0.0) {
        if (!(p.gamma0[j] > 0.0))
            throw std::invalid_argument("extract_rates: default horizon requires gamma0 > 0");
        t_max = 10.0 / p.gamma0[j];
    }

    const LindbladModel model = build_cqed_unit(p, which);
    const int dim = model.dim();

    // The unit model is time independent, so the sampled trajectory comes
    // from repeated application of one exact exponential step on vec(rho).
    const double dt = t_max / (n_samples - 1);
    const Matrix prop = (liouvillian(model).mat * dt).exp();

    Matrix rho = Matrix::Zero(dim, dim);
    rho(p.n_resonator, p.n_resonator) = 1.0;  // |e> x vacuum
    Vector v = Eigen::Map<const Vector>(rho.data(), dim * dim);

    std::vector<double> ts(n_samples), pe(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        if (i > 0) v = prop * v;
        const DensityMatrix state{Eigen::Map<const Matrix>(v.data(), dim, dim), model.layout};
        const DensityMatrix qubit = partial_trace(state, {0});
        const double pg = qubit.rho(0, 0).real();
        const double px = qubit.rho(1, 1).real();
        ts[i] = i * dt;
        pe[i] = px / (pg + px);
    }

    const ExpFit fit = fit_exponential(ts, pe);
    if (fit.rms > 0.02) throw FitError(fit.rms);

    const double rate = std::max(fit.rate, 0.0);
    const double pss = std::clamp(fit.c, 0.0, 1.0);
    return RateFit{rate * pss, rate * (1.0 - pss), pss, fit.rms};
}

// ---------------------------------------------------------------------------
// trajectory averages
// ---------------------------------------------------------------------------

Complex time_averaged_observable(const std::vector<DensityMatrix>& trajectory, const Matrix& op,
                                 double window_fraction) {
    std::vector<Complex> vals(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) vals[i] = expectation(trajectory[i], op);
    return trailing_mean(vals, window_fraction);
}

Complex time_averaged_observable(const std::vector<DensityMatrix>& trajectory,
                                 const std::vector<double>& times, const Matrix& op, double nu,
                                 double window_fraction) {
    if (times.size() != trajectory.size())
        throw std::invalid_argument("time_averaged_observable: times do not match the trajectory");
    std::vector<Complex> vals(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i)
        vals[i] = expectation(trajectory[i], op) * std::exp(iu * nu * times[i]);
    return trailing_mean(vals, window_fraction);
}

// ---------------------------------------------------------------------------
// drive-locked quasi-steady state
// ---------------------------------------------------------------------------

LockedCircuitState cqed_locked_state(const CqedParams& p, double t_span, int n_samples,
                                     double rtol, double atol, const DensityMatrix* start) {
    if (!(t_span > 0.0))
        throw std::invalid_argument("cqed_locked_state: span must be positive");
    if (n_samples < 16) throw std::invalid_argument("cqed_locked_state: need at least 16 samples");

    const LindbladModel model = build_cqed(p);
    DensityMatrix init{Matrix(), model.layout};
    if (start) {
        if (start->rho.rows() != model.dim())
            throw std::invalid_argument("cqed_locked_state: start state has the wrong dimension");
        init.rho = start->rho;
    } else {
        const DensityMatrix ss_a = steady_state(build_cqed_unit(p, Qubit::A));
        const DensityMatrix ss_b = steady_state(build_cqed_unit(p, Qubit::B));
        init.rho = Eigen::kroneckerProduct(ss_a.rho, ss_b.rho).eval();
    }

    std::vector<double> grid(n_samples);
    for (int i = 0; i < n_samples; ++i) grid[i] = t_span * i / (n_samples - 1);
    const std::vector<DensityMatrix> traj = evolve(model, init, grid, rtol, atol);

    const std::array<double, 2> nu = cqed_demod_frequencies(p);

    // Window sums over the trailing three quarters. The g-e element rho(1,0)
    // of a reduced transmon carries the locked component rotating as
    // exp(-i nu t); the joint state is rotated level by level, which freezes
    // the same components of the two-qubit coherences.
    const int w = n_samples / 4;
    std::array<Complex, 3> sum_a{}, sum_b{};
    std::array<Matrix, 3> sum_rho{Matrix::Zero(4, 4), Matrix::Zero(4, 4), Matrix::Zero(4, 4)};
    for (int k = 0; k < 3; ++k) {
        for (int i = n_samples - (3 - k) * w; i < n_samples - (2 - k) * w; ++i) {
            const double t = grid[i];
            const DensityMatrix ta = partial_trace(traj[i], {0});
            const DensityMatrix tb = partial_trace(traj[i], {2});
            sum_a[k] += ta.rho(1, 0) / (ta.rho(0, 0) + ta.rho(1, 1)).real() *
                        std::exp(iu * nu[0] * t);
            sum_b[k] += tb.rho(1, 0) / (tb.rho(0, 0) + tb.rho(1, 1)).real() *
                        std::exp(iu * nu[1] * t);

            const DensityMatrix joint = partial_trace(traj[i], {0, 2});
            Matrix r(4, 4);
            for (int ma = 0; ma < 2; ++ma)
                for (int mb = 0; mb < 2; ++mb)
                    for (int na = 0; na < 2; ++na)
                        for (int nb = 0; nb < 2; ++nb) {
                            const double phase = (ma - na) * nu[0] * t + (mb - nb) * nu[1] * t;
                            r(2 * ma + mb, 2 * na + nb) =
                                joint.rho(3 * ma + mb, 3 * na + nb) * std::exp(iu * phase);
                        }
            sum_rho[k] += r / r.trace().real();
        }
    }

    LockedCircuitState out{DensityMatrix{Matrix::Zero(4, 4), HilbertLayout{{2, 2}}},
                           0.0, 0.0, 0.0, 0.0, 0.0, traj.back()};
    const auto finish = [w](const std::array<Complex, 3>& s, Complex& value, double& tail) {
        const Complex m1 = s[0] / double(w), m2 = s[1] / double(w), m3 = s[2] / double(w);
        value = aitken3(m1, m2, m3);
        tail = std::abs(m3 - value) / std::max(std::abs(value), 1e-300);
    };
    finish(sum_a, out.coh_a, out.tail_a);
    finish(sum_b, out.coh_b, out.tail_b);

    Matrix rho(4, 4);
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n)
            rho(m, n) = aitken3(sum_rho[0](m, n) / double(w), sum_rho[1](m, n) / double(w),
                                sum_rho[2](m, n) / double(w));
    out.tail_state = (sum_rho[2] / double(w) - rho).norm() / std::max(rho.norm(), 1e-300);

    // Reproject onto the closest physical state; extrapolation noise may
    // leave tiny negative weights, anything sizable means a failed average.
    rho = 0.5 * (rho + rho.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-3)
        throw StructureError("cqed_locked_state: averaged state is strongly non positive");
    const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
    rho = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint();
    out.rho.rho = rho / rho.trace().real();
    return out;
}

}  // namespace qsync
