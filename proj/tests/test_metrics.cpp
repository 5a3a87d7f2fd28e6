#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <vector>

#include "qsync/errors.hpp"
#include "qsync/lindblad.hpp"
#include "qsync/metrics.hpp"
#include "qsync/models.hpp"
#include "qsync/operators.hpp"

using namespace qsync;

namespace {

constexpr double kTolExact = 1e-12;

// well-conditioned random density matrix
Matrix random_density(int d, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix x(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = Complex(dist(gen), dist(gen));
    Matrix rho = x * x.adjoint() + 0.05 * Matrix::Identity(d, d);
    return rho / rho.trace().real();
}

DensityMatrix qubit_state(const Matrix& rho) {
    return DensityMatrix{rho, HilbertLayout::single(2)};
}

// drive-on-A oscillator with both baths active
OscillatorParams weak_drive_params() {
    OscillatorParams p;
    p.w_a = 0.4;
    p.gamma_a = 0.6;
    p.w_b = 0.75;
    p.gamma_b = 0.25;
    p.eps = 1e-3;
    return p;
}

OscillatorParams composite_check_params() {
    OscillatorParams p;
    p.w_a = 0.55;
    p.gamma_a = 0.45;
    p.w_b = 0.09;
    p.gamma_b = 0.91;
    p.eps = 1e-3;
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Q function
// ---------------------------------------------------------------------------

TEST_CASE("Q function of basic qubit states") {
    Matrix up = Matrix::Zero(2, 2);
    up(0, 0) = 1.0;
    const DensityMatrix pure = qubit_state(up);
    const DensityMatrix mixed = qubit_state(0.5 * Matrix::Identity(2, 2));

    for (double th : {0.0, 0.4, 1.1, 2.5, pi}) {
        for (double ph : {0.0, 1.3, 4.0}) {
            const double c = std::cos(th / 2);
            CHECK(std::abs(husimi_q(pure, spin_half(), th, ph) - c * c) < kTolExact);
            CHECK(std::abs(husimi_q(mixed, spin_half(), th, ph) - 0.5) < kTolExact);
        }
    }
    CHECK_THROWS_AS(husimi_q(pure, spin_one(), 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("qubit Q matches the closed form in the Bloch components") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const DensityMatrix rho = qubit_state(random_density(2, seed));
        const double sz = expectation(rho, ops::spin_z(spin_half())).real();
        const Complex sp = expectation(rho, ops::spin_raise(spin_half()));
        for (double th : {0.0, 0.7, 1.5708, 2.9}) {
            for (double ph : {0.0, 0.9, 3.3, 5.9}) {
                const double closed =
                    0.5 + sz * std::cos(th) +
                    (sp * std::exp(Complex(0.0, -ph))).real() * std::sin(th);
                CHECK(std::abs(husimi_q(rho, spin_half(), th, ph) - closed) < kTolExact);
            }
        }
    }
}

TEST_CASE("Q equals its spherical-tensor expansion") {
    for (int ts : {1, 2}) {
        const SpinValue s = SpinValue::from_twice(ts);
        const DensityMatrix rho{random_density(s.dim(), 40 + ts),
                                HilbertLayout::single(s.dim())};
        for (double th : {0.05, 0.8, 1.9, 3.0}) {
            for (double ph : {0.2, 2.0, 4.4}) {
                const double direct = husimi_q(rho, s, th, ph);
                const double expanded = husimi_q_tensor_expansion(rho, s, th, ph);
                CHECK(std::abs(direct - expanded) < 1e-10);
            }
        }
    }
}

TEST_CASE("coherent-state completeness under trapezoidal quadrature") {
    // trapezoid in x = cos(theta): exact for the qubit's linear-in-x average
    const int n_x = 40, n_phi = 80;
    for (int ts : {1, 2, 3}) {
        const SpinValue s = SpinValue::from_twice(ts);
        const DensityMatrix rho{random_density(s.dim(), 60 + ts),
                                HilbertLayout::single(s.dim())};

        auto phi_avg = [&](double x) {
            const double th = std::acos(x);
            double acc = 0.0;
            for (int j = 0; j < n_phi; ++j) acc += husimi_q(rho, s, th, 2.0 * pi * j / n_phi);
            return acc * (2.0 * pi / n_phi);
        };

        double integral = 0.0;   // trapezoid nodes
        double simpson = 0.0;    // Simpson on the same grid, exact through cubics
        std::vector<double> f(n_x + 1);
        for (int i = 0; i <= n_x; ++i) f[i] = phi_avg(-1.0 + 2.0 * i / n_x);
        const double h = 2.0 / n_x;
        for (int i = 0; i < n_x; ++i) integral += 0.5 * h * (f[i] + f[i + 1]);
        for (int i = 0; i < n_x; i += 2) simpson += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);

        const double norm = (ts + 1.0) / (4.0 * pi);
        if (ts == 1) CHECK(std::abs(norm * integral - 1.0) < 1e-6);
        CHECK(std::abs(norm * simpson - 1.0) < 1e-6);
    }
}

// ---------------------------------------------------------------------------
// phase distribution
// ---------------------------------------------------------------------------

TEST_CASE("deltaP values and mean-zero property") {
    Matrix m = 0.5 * Matrix::Identity(2, 2);
    m(1, 0) = 0.1;  // <S+> = 0.1
    m(0, 1) = 0.1;
    const DensityMatrix rho = qubit_state(m);

    CHECK(std::abs(delta_p(rho, 0.0) - 0.025) < kTolExact);
    CHECK(std::abs(delta_p(rho, pi) + 0.025) < kTolExact);
    CHECK(std::abs(delta_p(rho, pi / 2) - 0.0) < kTolExact);

    const auto curve = delta_p_curve(rho, 128);
    double mean = 0.0;
    for (const auto& [phi, dp] : curve) mean += dp * (2.0 * pi / curve.size());
    CHECK(std::abs(mean) < kTolExact);

    // no coherence: flat zero curve
    const DensityMatrix flat = qubit_state(Matrix(Vector::Constant(2, 0.5).asDiagonal()));
    for (const auto& [phi, dp] : delta_p_curve(flat, 32)) CHECK(std::abs(dp) < kTolExact);

    const DensityMatrix big{Matrix::Identity(3, 3) / 3.0, HilbertLayout::single(3)};
    CHECK_THROWS_AS(delta_p(big, 0.0), std::invalid_argument);
}

TEST_CASE("deltaP extrema move by pi when the coherence flips sign") {
    Matrix plus = 0.5 * Matrix::Identity(2, 2);
    plus(1, 0) = 0.08;
    plus(0, 1) = 0.08;
    Matrix minus = plus;
    minus(1, 0) = -0.08;
    minus(0, 1) = -0.08;

    auto argmax = [](const std::vector<std::pair<double, double>>& curve) {
        int best = 0;
        for (int i = 1; i < static_cast<int>(curve.size()); ++i)
            if (curve[i].second > curve[best].second) best = i;
        return curve[best].first;
    };

    const double peak_plus = argmax(delta_p_curve(qubit_state(plus), 256));
    const double peak_minus = argmax(delta_p_curve(qubit_state(minus), 256));
    double shift = std::abs(peak_plus - peak_minus);
    shift = std::min(shift, 2.0 * pi - shift);
    CHECK(std::abs(shift - pi) < 1e-12);
}

// ---------------------------------------------------------------------------
// phase locking
// ---------------------------------------------------------------------------

TEST_CASE("undriven steady state carries no coherence") {
    OscillatorParams p = weak_drive_params();
    p.eps = 0.0;
    p.g = 0.7;
    const DensityMatrix ss = steady_state(build_two_qudit(p));
    CHECK(phase_locking(ss, 0).magnitude < 1e-10);
    CHECK(phase_locking(ss, 1).magnitude < 1e-10);
}

TEST_CASE("uncoupled driven qubit reaches the analytic normalized coherence") {
    OscillatorParams p = weak_drive_params();
    p.g = 0.0;
    const DensityMatrix ss = steady_state(build_two_qudit(p));

    // first order in eps: |<S+_A>|/eps = |w_A - gamma_A| / Gamma_A = 0.2
    const PhaseLockResult a = phase_locking(ss, 0, p.eps);
    const PhaseLockResult b = phase_locking(ss, 1, p.eps);
    CHECK(std::abs(a.normalized - 0.2) < 1e-4);
    CHECK(b.magnitude < 1e-12);
    CHECK(a.magnitude == std::abs(a.coherence));
    CHECK(std::isnan(phase_locking(ss, 0).normalized));
}

TEST_CASE("phase-locking magnitudes are invariant under global z rotations") {
    OscillatorParams p = weak_drive_params();
    p.g = 1.3;
    p.delta_d = 0.2;
    const DensityMatrix ss = steady_state(build_two_qudit(p));
    const Matrix sz = total_sz_operator(ss.layout);

    std::mt19937 gen(11);
    std::uniform_real_distribution<double> uphi(0.0, 2.0 * pi);
    for (int trial = 0; trial < 5; ++trial) {
        const double phi = uphi(gen);
        const Matrix u = (Complex(0.0, -phi) * sz).exp();
        const DensityMatrix rotated{u * ss.rho * u.adjoint(), ss.layout};
        for (int which : {0, 1}) {
            CHECK(std::abs(phase_locking(rotated, which).magnitude -
                           phase_locking(ss, which).magnitude) < kTolExact);
        }
    }
}

// ---------------------------------------------------------------------------
// tensor expectations
// ---------------------------------------------------------------------------

TEST_CASE("tensor expectation tables") {
    const DensityMatrix mixed{Matrix::Identity(3, 3) / 3.0, HilbertLayout::single(3)};
    const auto table = tensor_expectations(mixed, spin_one());
    CHECK(table.size() == 9);
    for (const auto& entry : table) {
        if (entry.k == 0)
            CHECK(std::abs(entry.value - Complex(1.0 / std::sqrt(3.0), 0.0)) < kTolExact);
        else
            CHECK(std::abs(entry.value) < kTolExact);
    }

    const DensityMatrix rho{random_density(4, 17), HilbertLayout::single(4)};
    const auto big = tensor_expectations(rho, SpinValue::from_twice(3));
    CHECK(big.size() == 16);
    CHECK(std::abs(big[0].value - Complex(0.5, 0.0)) < kTolExact);
}

// ---------------------------------------------------------------------------
// entropy
// ---------------------------------------------------------------------------

TEST_CASE("von Neumann entropy basics") {
    Vector v(3);
    v << Complex(0.6, 0.1), Complex(-0.3, 0.4), Complex(0.2, -0.5);
    v.normalize();
    const DensityMatrix pure{v * v.adjoint(), HilbertLayout::single(3)};
    CHECK(std::abs(von_neumann_entropy(pure)) < 1e-12);

    const DensityMatrix mixed{Matrix::Identity(4, 4) / 4.0, HilbertLayout::single(4)};
    CHECK(std::abs(von_neumann_entropy(mixed) - std::log(4.0)) < kTolExact);
}

TEST_CASE("entropy is additive over product states") {
    const Matrix a = random_density(2, 21);
    const Matrix b = random_density(3, 22);
    const DensityMatrix joint{Eigen::kroneckerProduct(a, b).eval(), HilbertLayout{{2, 3}}};
    const double sum = von_neumann_entropy(DensityMatrix{a, HilbertLayout::single(2)}) +
                       von_neumann_entropy(DensityMatrix{b, HilbertLayout::single(3)});
    CHECK(std::abs(von_neumann_entropy(joint) - sum) < 1e-10);
}

TEST_CASE("entropy eigenvalue clamp policy") {
    Matrix slightly = Matrix::Zero(2, 2);
    slightly(0, 0) = 1.0 + 5e-9;
    slightly(1, 1) = -5e-9;
    const DensityMatrix ok{slightly, HilbertLayout::single(2)};
    CHECK(std::abs(von_neumann_entropy(ok)) < 1e-7);

    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 0) = 1.0 + 3e-8;
    bad(1, 1) = -3e-8;
    const DensityMatrix broken{bad, HilbertLayout::single(2)};
    CHECK_THROWS_AS(von_neumann_entropy(broken), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// synchronization measure
// ---------------------------------------------------------------------------

TEST_CASE("total Sz operator") {
    const Matrix sz2 = total_sz_operator(HilbertLayout{{2, 2}});
    Vector diag(4);
    diag << 1.0, 0.0, 0.0, -1.0;
    CHECK((sz2 - Matrix(diag.asDiagonal())).cwiseAbs().maxCoeff() < kTolExact);

    const Matrix sz3 = total_sz_operator(HilbertLayout{{3, 3}});
    CHECK(std::abs(sz3(0, 0) - Complex(2.0, 0.0)) < kTolExact);
    CHECK(std::abs(sz3(4, 4)) < kTolExact);
    CHECK(std::abs(sz3(8, 8) + Complex(2.0, 0.0)) < kTolExact);
}

TEST_CASE("measure vanishes when the driven state equals the reference") {
    OscillatorParams p = composite_check_params();
    p.eps = 0.0;
    p.g = 0.4;
    const DensityMatrix ss = steady_state(build_two_qudit(p));
    const SyncResult r = sync_measure(ss, ss);
    CHECK(r.omega == 0.0);
    CHECK(r.basis.cols() == 4);
    CHECK(std::abs(r.rho_diag_entropy - r.rho_entropy) < 1e-12);
}

TEST_CASE("measure grows quadratically in the drive") {
    OscillatorParams p = composite_check_params();
    p.g = 0.3;
    OscillatorParams pu = p;
    pu.eps = 0.0;
    const DensityMatrix undriven = steady_state(build_two_qudit(pu));

    p.eps = 1e-3;
    const double omega_full = sync_measure(steady_state(build_two_qudit(p)), undriven).omega;
    p.eps = 5e-4;
    const double omega_half = sync_measure(steady_state(build_two_qudit(p)), undriven).omega;

    CHECK(omega_full > 0.0);
    const double ratio = omega_full / omega_half;
    CHECK(ratio > 3.8);
    CHECK(ratio < 4.2);
}

TEST_CASE("measure is positive and detects commuting states") {
    OscillatorParams p = weak_drive_params();
    p.eps = 0.05;
    for (double g : {0.0, 0.5, 1.5}) {
        p.g = g;
        OscillatorParams pu = p;
        pu.eps = 0.0;
        const DensityMatrix undriven = steady_state(build_two_qudit(pu));
        const DensityMatrix driven = steady_state(build_two_qudit(p));
        const SyncResult r = sync_measure(driven, undriven);
        CHECK(r.omega >= 0.0);

        // commutator with the basis projectors tracks omega
        double comm = 0.0;
        for (int j = 0; j < r.basis.cols(); ++j) {
            const Matrix proj = r.basis.col(j) * r.basis.col(j).adjoint();
            comm = std::max(comm, (driven.rho * proj - proj * driven.rho).cwiseAbs().maxCoeff());
        }
        const SyncResult self = sync_measure(undriven, undriven);
        double comm_self = 0.0;
        for (int j = 0; j < self.basis.cols(); ++j) {
            const Matrix proj = self.basis.col(j) * self.basis.col(j).adjoint();
            comm_self =
                std::max(comm_self, (undriven.rho * proj - proj * undriven.rho).cwiseAbs().maxCoeff());
        }
        CHECK((r.omega < 1e-10) == (comm < 1e-10));
        CHECK((self.omega < 1e-10) == (comm_self < 1e-10));
    }
}

TEST_CASE("degenerate reference states get a deterministic Sz-sorted basis") {
    // both baths balanced: the undriven steady state is maximally mixed
    OscillatorParams p;
    p.w_a = 0.5;
    p.gamma_a = 0.5;
    p.w_b = 0.5;
    p.gamma_b = 0.5;
    const DensityMatrix ru = steady_state(build_two_qudit(p));
    CHECK((ru.rho - 0.25 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);

    OscillatorParams pd = p;
    pd.eps = 0.02;
    pd.g = 0.4;
    const DensityMatrix driven = steady_state(build_two_qudit(pd));

    const SyncResult r1 = sync_measure(driven, ru);
    const SyncResult r2 = sync_measure(driven, ru);
    CHECK((r1.basis - r2.basis).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r1.omega == r2.omega);

    // basis diagonalizes total Sz with descending eigenvalues
    const Matrix sz = total_sz_operator(ru.layout);
    const Matrix proj = r1.basis.adjoint() * sz * r1.basis;
    Matrix off = proj;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 0; i + 1 < 4; ++i)
        CHECK(proj(i, i).real() >= proj(i + 1, i + 1).real() - 1e-12);
}

// ---------------------------------------------------------------------------
// partially-coherent measure
// ---------------------------------------------------------------------------

TEST_CASE("pinching leaves block-diagonal states unchanged") {
    OscillatorParams p = composite_check_params();
    p.eps = 0.0;
    p.g = 0.4;
    const LindbladModel undriven = build_two_qudit(p);
    const DensityMatrix ru = steady_state(undriven);
    const SyncResult r = sync_measure_partial(ru, undriven);
    CHECK(r.omega == 0.0);
}

TEST_CASE("non-block reference states are rejected") {
    Vector plus(2);
    plus << 1.0, 1.0;
    plus.normalize();
    const Vector both = Eigen::kroneckerProduct(plus, plus).eval();
    const DensityMatrix coherent_ref{both * both.adjoint(), HilbertLayout{{2, 2}}};
    const DensityMatrix driven{0.25 * Matrix::Identity(4, 4), HilbertLayout{{2, 2}}};
    const Matrix sz = total_sz_operator(HilbertLayout{{2, 2}});
    CHECK_THROWS_AS(sync_measure_partial_from(driven, coherent_ref, sz), StructureError);
}

TEST_CASE("diagonal and partially-coherent measures agree at weak drive") {
    OscillatorParams p = composite_check_params();
    OscillatorParams pu = p;
    pu.eps = 0.0;
    for (double g : {0.15, 0.45, 0.9}) {
        p.g = g;
        pu.g = g;
        const LindbladModel undriven = build_two_qudit(pu);
        const DensityMatrix ru = steady_state(undriven);
        const DensityMatrix driven = steady_state(build_two_qudit(p));

        const double full = sync_measure(driven, ru).omega;
        const double partial = sync_measure_partial(driven, undriven).omega;
        CHECK(partial <= full + 1e-15);
        CHECK(std::abs(full - partial) < 1e-6 * full);
    }
}

TEST_CASE("pinching attains the numerical block-family optimum") {
    const Matrix sz = total_sz_operator(HilbertLayout{{2, 2}});
    for (unsigned seed = 100; seed < 110; ++seed) {
        const DensityMatrix rho{random_density(4, seed), HilbertLayout{{2, 2}}};
        const DensityMatrix ref{Matrix(random_density(4, seed + 1000).diagonal().asDiagonal()),
                                HilbertLayout{{2, 2}}};
        const double pinched = sync_measure_partial_from(rho, ref, sz).omega;
        const double numeric = relative_entropy_block_min_numeric(rho, sz);
        CHECK(numeric >= pinched - 1e-8);
        CHECK(std::abs(numeric - pinched) < 1e-6);
    }
}

// ---------------------------------------------------------------------------
// enhancement ratio
// ---------------------------------------------------------------------------

TEST_CASE("ratio against the uncoupled system") {
    OscillatorParams p = composite_check_params();
    const RatioResult unity = ratio_r(p, 0.0);
    CHECK(!unity.infinite);
    CHECK(std::abs(unity.value - 1.0) < 1e-9);

    const RatioResult some = ratio_r(p, 0.6);
    CHECK(!some.infinite);
    CHECK(some.value > 0.0);
    CHECK(std::isfinite(some.value));
}

TEST_CASE("balanced gain and loss flags an infinite ratio") {
    OscillatorParams p;
    p.w_a = 0.5;
    p.gamma_a = 0.5;
    p.w_b = 0.09;
    p.gamma_b = 0.91;
    p.eps = 1e-3;
    const RatioResult r = ratio_r(p, 0.8);
    CHECK(r.infinite);
    CHECK(std::isinf(r.value));
    CHECK(r.omega_0 <= 1e-14);
}
