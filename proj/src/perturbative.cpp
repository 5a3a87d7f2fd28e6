#include "qsync/perturbative.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "qsync/lindblad.hpp"
#include "qsync/metrics.hpp"

namespace qsync {

namespace {

void require_qubits(const OscillatorParams& p, const char* where) {
    if (p.s.twice_s != 1)
        throw std::invalid_argument(std::string(where) + ": closed cumulant systems need s = 1/2");
}

Complex first_order_coherence(const OscillatorParams& p, Qubit which) {
    const FirstOrderState s = solve_first(p);
    return which == Qubit::A ? s.splus_a : s.splus_b;
}

// bisection on one quadrature, assuming a sign change inside [lo, hi]
double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double f_lo = f(lo);
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_lo < 0.0) == (f_mid < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> bracket_roots(const std::function<double(double)>& f,
                                  const std::vector<double>& grid,
                                  const std::vector<double>& values) {
    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (values[i] == 0.0) {
            roots.push_back(grid[i]);
        } else if ((values[i] < 0.0) != (values[i + 1] < 0.0)) {
            roots.push_back(bisect(f, grid[i], grid[i + 1]));
        }
    }
    if (!values.empty() && values.back() == 0.0) roots.push_back(grid.back());
    return roots;
}

}  // namespace

// ---------------------------------------------------------------------------
// cumulant linear systems
// ---------------------------------------------------------------------------

ZerothOrderState solve_zeroth(const OscillatorParams& p) {
    require_qubits(p, "solve_zeroth");
    p.validate();
    const double ga = p.gamma_total_a(), gb = p.gamma_total_b();
    if (ga <= 0.0 || gb <= 0.0)
        throw std::invalid_argument("solve_zeroth: total rates must be positive");

    const double da = p.w_a - p.gamma_a;  // bath asymmetries
    const double db = p.w_b - p.gamma_b;
    const double gbar = ga + gb + 4.0 * p.gamma_phi;

    // unknowns: (<Sz_A>, <Sz_B>, <Sz_A Sz_B>, Re c, Im c) with c = <S+_A S-_B>
    Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
    Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();

    m(0, 0) = -ga;
    m(0, 4) = p.g;
    rhs(0) = -0.5 * da;

    m(1, 1) = -gb;
    m(1, 4) = -p.g;
    rhs(1) = -0.5 * db;

    m(2, 0) = 0.5 * db;
    m(2, 1) = 0.5 * da;
    m(2, 2) = -(ga + gb);

    m(3, 3) = -0.5 * gbar;
    m(3, 4) = p.delta_q;

    m(4, 0) = -0.5 * p.g;
    m(4, 1) = 0.5 * p.g;
    m(4, 3) = -p.delta_q;
    m(4, 4) = -0.5 * gbar;

    Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(m);
    if (!lu.isInvertible()) throw std::runtime_error("solve_zeroth: singular system");
    const Eigen::Matrix<double, 5, 1> x = lu.solve(rhs);

    ZerothOrderState out;
    out.sz_a = x(0);
    out.sz_b = x(1);
    out.szsz = x(2);
    out.splus_a_sminus_b = Complex(x(3), x(4));
    return out;
}

FirstOrderState solve_first(const OscillatorParams& p) {
    require_qubits(p, "solve_first");
    const ZerothOrderState z = solve_zeroth(p);
    const double ga = p.gamma_total_a(), gb = p.gamma_total_b();
    const double da = p.w_a - p.gamma_a;
    const double db = p.w_b - p.gamma_b;
    const Complex iu(0.0, 1.0);

    // unknowns: (<S+_A>, <S+_B>, <S+_A Sz_B>, <Sz_A S+_B>, <S+_A S+_B>)_1
    Matrix m = Matrix::Zero(5, 5);
    Vector rhs = Vector::Zero(5);

    m(0, 0) = -0.5 * (ga + 2.0 * p.gamma_phi) + iu * p.delta_d;
    m(0, 3) = -iu * p.g;
    rhs(0) = iu * z.sz_a;

    m(1, 1) = -0.5 * (gb + 2.0 * p.gamma_phi) + iu * (p.delta_d + p.delta_q);
    m(1, 2) = -iu * p.g;

    m(2, 0) = 0.5 * db;
    m(2, 1) = -iu * p.g / 4.0;
    m(2, 2) = -0.5 * (ga + 2.0 * p.gamma_phi) - gb + iu * p.delta_d;
    rhs(2) = iu * z.szsz;

    m(3, 0) = -iu * p.g / 4.0;
    m(3, 1) = 0.5 * da;
    m(3, 3) = -0.5 * (gb + 2.0 * p.gamma_phi) - ga + iu * (p.delta_d + p.delta_q);
    rhs(3) = -0.5 * iu * std::conj(z.splus_a_sminus_b);

    m(4, 4) = -0.5 * (ga + gb + 4.0 * p.gamma_phi) + iu * (2.0 * p.delta_d + p.delta_q);

    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible())
        throw std::runtime_error("solve_first: singular system at g = " + std::to_string(p.g) +
                                 ", delta_d = " + std::to_string(p.delta_d));
    const Vector u = lu.solve(rhs);

    FirstOrderState out;
    out.splus_a = u(0);
    out.splus_b = u(1);
    out.splus_a_sz_b = u(2);
    out.sz_a_splus_b = u(3);
    out.splus_a_splus_b = u(4);
    return out;
}

// ---------------------------------------------------------------------------
// zero crossings
// ---------------------------------------------------------------------------

std::optional<double> zero_crossing(const OscillatorParams& p, Qubit which, double g_lo,
                                    double g_hi, ZeroCrossingScan* diag) {
    require_qubits(p, "zero_crossing");
    if (!(g_lo < g_hi)) throw std::invalid_argument("zero_crossing: need g_lo < g_hi");
    constexpr int kNodes = 400;
    constexpr double kDeadQuadrature = 1e-13;
    constexpr double kPairTol = 1e-6;

    const auto coherence = [&](double g) {
        OscillatorParams q = p;
        q.g = g;
        return first_order_coherence(q, which);
    };

    std::vector<double> grid(kNodes), re(kNodes), im(kNodes);
    double min_mag = std::numeric_limits<double>::infinity();
    double g_at_min = g_lo;
    for (int i = 0; i < kNodes; ++i) {
        grid[i] = g_lo + (g_hi - g_lo) * i / (kNodes - 1);
        const Complex c = coherence(grid[i]);
        re[i] = c.real();
        im[i] = c.imag();
        if (std::abs(c) < min_mag) {
            min_mag = std::abs(c);
            g_at_min = grid[i];
        }
    }
    if (diag) *diag = ZeroCrossingScan{g_at_min, min_mag};

    const double re_scale = *std::max_element(re.begin(), re.end(),
                                              [](double a, double b) {
                                                  return std::abs(a) < std::abs(b);
                                              });
    const double im_scale = *std::max_element(im.begin(), im.end(),
                                              [](double a, double b) {
                                                  return std::abs(a) < std::abs(b);
                                              });
    const bool re_dead = std::abs(re_scale) < kDeadQuadrature;
    const bool im_dead = std::abs(im_scale) < kDeadQuadrature;
    if (re_dead && im_dead) return std::nullopt;  // no coherence anywhere, no crossing

    const auto re_fn = [&](double g) { return coherence(g).real(); };
    const auto im_fn = [&](double g) { return coherence(g).imag(); };
    const std::vector<double> re_roots = re_dead ? std::vector<double>{} : bracket_roots(re_fn, grid, re);
    const std::vector<double> im_roots = im_dead ? std::vector<double>{} : bracket_roots(im_fn, grid, im);

    std::vector<double> candidates;
    if (re_dead) {
        candidates = im_roots;
    } else if (im_dead) {
        candidates = re_roots;
    } else {
        for (double ra : re_roots)
            for (double rb : im_roots)
                if (std::abs(ra - rb) < kPairTol) candidates.push_back(0.5 * (ra + rb));
        std::sort(candidates.begin(), candidates.end());
    }

    for (double g0 : candidates)
        if (std::abs(coherence(g0)) < 1e-12) return g0;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// existence map
// ---------------------------------------------------------------------------

std::vector<std::vector<ExistenceCell>> existence_map(const std::vector<double>& w_a_grid,
                                                      const std::vector<double>& w_b_grid,
                                                      const OscillatorParams& base, double g_lo,
                                                      double g_hi) {
    std::vector<std::vector<ExistenceCell>> map(w_a_grid.size(),
                                                std::vector<ExistenceCell>(w_b_grid.size()));
    for (std::size_t i = 0; i < w_a_grid.size(); ++i) {
        for (std::size_t j = 0; j < w_b_grid.size(); ++j) {
            if (!(w_a_grid[i] > 0.0 && w_a_grid[i] < 1.0 && w_b_grid[j] > 0.0 &&
                  w_b_grid[j] < 1.0))
                throw std::invalid_argument("existence_map: grid must lie inside (0,1)^2");
            OscillatorParams p = base;
            p.w_a = w_a_grid[i];
            p.gamma_a = 1.0 - w_a_grid[i];
            p.w_b = w_b_grid[j];
            p.gamma_b = 1.0 - w_b_grid[j];
            map[i][j].g0_a = zero_crossing(p, Qubit::A, g_lo, g_hi);
            map[i][j].g0_b = zero_crossing(p, Qubit::B, g_lo, g_hi);
        }
    }
    return map;
}

// ---------------------------------------------------------------------------
// detuning restoration
// ---------------------------------------------------------------------------

namespace {

// damped Newton on both quadratures, constrained to stay near the search box
std::optional<DetuningRestore> polish_root(
    const std::function<Complex(double, double)>& f, double dq, double g, double dq_lo,
    double dq_hi, double g_lo, double g_hi) {
    const double dq_margin = 0.1 * (dq_hi - dq_lo);
    const double g_margin = 0.1 * (g_hi - g_lo);
    Complex val = f(dq, g);
    for (int it = 0; it < 60; ++it) {
        if (std::abs(val) < 1e-13) break;
        const double h = 1e-7;
        const Complex fdq = (f(dq + h, g) - f(dq - h, g)) / (2.0 * h);
        const Complex fg = (f(dq, g + h) - f(dq, g - h)) / (2.0 * h);
        Eigen::Matrix2d jac;
        jac << fdq.real(), fg.real(), fdq.imag(), fg.imag();
        const Eigen::Vector2d rhs(-val.real(), -val.imag());
        if (std::abs(jac.determinant()) < 1e-300) return std::nullopt;
        const Eigen::Vector2d step = jac.inverse() * rhs;

        double scale = 1.0;
        bool moved = false;
        for (int damp = 0; damp < 30; ++damp) {
            const double dq_new = dq + scale * step(0);
            const double g_new = g + scale * step(1);
            const bool inside = dq_new > dq_lo - dq_margin && dq_new < dq_hi + dq_margin &&
                                g_new > g_lo - g_margin && g_new < g_hi + g_margin;
            if (inside) {
                const Complex val_new = f(dq_new, g_new);
                if (std::abs(val_new) < std::abs(val)) {
                    dq = dq_new;
                    g = g_new;
                    val = val_new;
                    moved = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (!moved) break;
    }

    if (std::abs(val) > 1e-10) return std::nullopt;
    if (dq < dq_lo - 1e-9 || dq > dq_hi + 1e-9 || g < g_lo - 1e-9 || g > g_hi + 1e-9)
        return std::nullopt;
    return DetuningRestore{dq, g};
}

}  // namespace

std::optional<DetuningRestore> restore_detuning(const OscillatorParams& p, double dq_lo,
                                                double dq_hi, double g_lo, double g_hi) {
    require_qubits(p, "restore_detuning");

    const std::function<Complex(double, double)> f = [&](double dq, double g) {
        OscillatorParams q = p;
        q.delta_q = dq;
        q.g = g;
        return first_order_coherence(q, Qubit::A);
    };

    // Trace curves where one quadrature vanishes in g and watch the other
    // quadrature change sign along them; a magnitude-only search would chase
    // the decaying |<S+>| tail at large g instead of a true double zero.
    constexpr int kDqNodes = 101;
    constexpr int kGNodes = 161;
    const double branch_tol = (g_hi - g_lo) / 12.0;

    const auto g_roots_of = [&](double dq, bool use_re) {
        std::vector<double> grid(kGNodes), vals(kGNodes);
        for (int j = 0; j < kGNodes; ++j) {
            grid[j] = g_lo + (g_hi - g_lo) * j / (kGNodes - 1);
            const Complex c = f(dq, grid[j]);
            vals[j] = use_re ? c.real() : c.imag();
        }
        const auto fn = [&](double g) {
            const Complex c = f(dq, g);
            return use_re ? c.real() : c.imag();
        };
        return bracket_roots(fn, grid, vals);
    };

    std::vector<std::optional<DetuningRestore>> found;
    for (const bool use_re : {true, false}) {
        std::vector<double> prev_roots;
        double prev_dq = dq_lo;
        for (int i = 0; i < kDqNodes; ++i) {
            const double dq = dq_lo + (dq_hi - dq_lo) * i / (kDqNodes - 1);
            const std::vector<double> roots = g_roots_of(dq, use_re);
            for (double r : roots) {
                for (double r_prev : prev_roots) {
                    if (std::abs(r - r_prev) > branch_tol) continue;
                    const Complex c_here = f(dq, r);
                    const Complex c_prev = f(prev_dq, r_prev);
                    const double other_here = use_re ? c_here.imag() : c_here.real();
                    const double other_prev = use_re ? c_prev.imag() : c_prev.real();
                    if ((other_here < 0.0) == (other_prev < 0.0)) continue;
                    found.push_back(polish_root(f, 0.5 * (dq + prev_dq), 0.5 * (r + r_prev),
                                                dq_lo, dq_hi, g_lo, g_hi));
                }
            }
            prev_roots = roots;
            prev_dq = dq;
        }
    }

    std::optional<DetuningRestore> best;
    for (const auto& cand : found) {
        if (!cand) continue;
        if (!best || cand->g0 < best->g0 - 1e-9 ||
            (std::abs(cand->g0 - best->g0) < 1e-9 && std::abs(cand->delta_q) < std::abs(best->delta_q)))
            best = cand;
    }
    return best;
}

// ---------------------------------------------------------------------------
// enhancement-ratio extrema
// ---------------------------------------------------------------------------

namespace {

double omega_at_coupling(const OscillatorParams& p, double g) {
    OscillatorParams q = p;
    q.g = g;
    const DensityMatrix driven = steady_state(build_two_qudit(q));
    OscillatorParams qu = q;
    qu.eps = 0.0;
    const DensityMatrix undriven = steady_state(build_two_qudit(qu));
    return sync_measure(driven, undriven).omega;
}

// golden-section refinement of an extremum bracketed by three scan nodes
double golden_refine(const std::function<double(double)>& f, double lo, double hi,
                     bool maximize) {
    const double phi_ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - phi_ratio * (b - a);
    double x2 = a + phi_ratio * (b - a);
    double f1 = maximize ? -f(x1) : f(x1);
    double f2 = maximize ? -f(x2) : f(x2);
    for (int it = 0; it < 60 && (b - a) > 1e-10; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi_ratio * (b - a);
            f1 = maximize ? -f(x1) : f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi_ratio * (b - a);
            f2 = maximize ? -f(x2) : f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

RMaxResult r_max(const OscillatorParams& p, double g_lo, double g_hi, int n_scan) {
    if (n_scan < 3) throw std::invalid_argument("r_max: need at least 3 scan points");
    const auto omega_fn = [&](double g) { return omega_at_coupling(p, g); };

    RMaxResult out;
    out.omega_0 = omega_at_coupling(p, 0.0);

    std::vector<double> grid(n_scan), omega(n_scan);
    int arg_max = 0, arg_min = 0;
    for (int i = 0; i < n_scan; ++i) {
        grid[i] = g_lo + (g_hi - g_lo) * i / (n_scan - 1);
        omega[i] = omega_fn(grid[i]);
        if (omega[i] > omega[arg_max]) arg_max = i;
        if (omega[i] < omega[arg_min]) arg_min = i;
    }

    const auto refine = [&](int idx, bool maximize) {
        const double lo = grid[std::max(idx - 1, 0)];
        const double hi = grid[std::min(idx + 1, n_scan - 1)];
        return lo < hi ? golden_refine(omega_fn, lo, hi, maximize) : grid[idx];
    };
    out.g_star = refine(arg_max, true);
    out.omega_max = std::max(omega_fn(out.g_star), omega[arg_max]);
    out.g_dip = refine(arg_min, false);
    const double omega_min = std::min(omega_fn(out.g_dip), omega[arg_min]);

    if (out.omega_0 <= 1e-14) {
        out.infinite = true;
        out.r_max = std::numeric_limits<double>::infinity();
        out.r_min = std::numeric_limits<double>::infinity();
    } else {
        out.r_max = out.omega_max / out.omega_0;
        out.r_min = omega_min / out.omega_0;
    }
    return out;
}

}  // namespace qsync
