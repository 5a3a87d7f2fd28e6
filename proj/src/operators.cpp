#include "qsync/operators.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qsync::ops {

namespace {

// n! as double; exact for the small arguments used here.
double fact(int n) {
    static const auto table = [] {
        std::array<double, 64> t{};
        t[0] = 1.0;
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
        return t;
    }();
    return table.at(static_cast<std::size_t>(n));
}

}  // namespace

// ---------------- spin ladder algebra ----------------

Matrix spin_z(SpinValue s) {
    const int d = s.dim();
    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = 0.5 * (s.twice_s - 2 * i);
    return m;
}

Matrix spin_raise(SpinValue s) {
    // S+|s,m> = sqrt((s-m)(s+m+1)) |s,m+1>; row i-1 holds the image of column i.
    const int d = s.dim();
    const double sv = s.value();
    Matrix m = Matrix::Zero(d, d);
    for (int i = 1; i < d; ++i) {
        const double mm = sv - i;
        m(i - 1, i) = std::sqrt((sv - mm) * (sv + mm + 1.0));
    }
    return m;
}

Matrix spin_lower(SpinValue s) { return spin_raise(s).adjoint(); }

Matrix boson_ladder(int n_levels) {
    if (n_levels < 2) throw std::invalid_argument("boson_ladder: need at least 2 levels");
    Matrix m = Matrix::Zero(n_levels, n_levels);
    for (int n = 1; n < n_levels; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return m;
}

Matrix embed(const Matrix& op, int site, const HilbertLayout& layout) {
    if (site < 0 || site >= layout.n_factors())
        throw std::invalid_argument("embed: site index out of range");
    if (op.rows() != op.cols() || op.rows() != layout.dims[static_cast<std::size_t>(site)])
        throw std::invalid_argument("embed: operator dimension does not match layout factor");

    int left = 1, right = 1;
    for (int f = 0; f < site; ++f) left *= layout.dims[static_cast<std::size_t>(f)];
    for (int f = site + 1; f < layout.n_factors(); ++f)
        right *= layout.dims[static_cast<std::size_t>(f)];

    const Matrix il = Matrix::Identity(left, left);
    const Matrix ir = Matrix::Identity(right, right);
    return Eigen::kroneckerProduct(il, Eigen::kroneckerProduct(op, ir).eval()).eval();
}

// ---------------- irreducible tensor operators ----------------

double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M) {
    if (two_j1 < 0 || two_j2 < 0 || two_J < 0)
        throw std::invalid_argument("clebsch_gordan: negative angular momentum");
    if ((two_j1 + two_m1) % 2 != 0 || (two_j2 + two_m2) % 2 != 0 || (two_J + two_M) % 2 != 0)
        throw std::invalid_argument("clebsch_gordan: m incompatible with j");

    if (two_m1 + two_m2 != two_M) return 0.0;
    if (std::abs(two_m1) > two_j1 || std::abs(two_m2) > two_j2 || std::abs(two_M) > two_J)
        return 0.0;
    // triangle rule, and j1+j2+J must be integer
    if (two_J > two_j1 + two_j2 || two_J < std::abs(two_j1 - two_j2)) return 0.0;
    if ((two_j1 + two_j2 + two_J) % 2 != 0) return 0.0;

    // Racah's closed form. All factorial arguments below are guaranteed integral;
    // divide doubled values by 2 only after combining.
    const int a1 = (two_j1 + two_j2 - two_J) / 2;
    const int a2 = (two_j1 - two_j2 + two_J) / 2;
    const int a3 = (-two_j1 + two_j2 + two_J) / 2;
    const int a4 = (two_j1 + two_j2 + two_J) / 2 + 1;

    const double pref =
        std::sqrt((two_J + 1.0) * fact(a1) * fact(a2) * fact(a3) / fact(a4)) *
        std::sqrt(fact((two_J + two_M) / 2) * fact((two_J - two_M) / 2) *
                  fact((two_j1 - two_m1) / 2) * fact((two_j1 + two_m1) / 2) *
                  fact((two_j2 - two_m2) / 2) * fact((two_j2 + two_m2) / 2));

    double sum = 0.0;
    for (int t = 0;; ++t) {
        const int b1 = a1 - t;                                    // j1+j2-J-t
        const int b2 = (two_j1 - two_m1) / 2 - t;                 // j1-m1-t
        const int b3 = (two_j2 + two_m2) / 2 - t;                 // j2+m2-t
        const int b4 = (two_J - two_j2 + two_m1) / 2 + t;         // J-j2+m1+t
        const int b5 = (two_J - two_j1 - two_m2) / 2 + t;         // J-j1-m2+t
        if (b1 < 0 || b2 < 0 || b3 < 0) break;
        if (b4 < 0 || b5 < 0) continue;
        const double term =
            1.0 / (fact(t) * fact(b1) * fact(b2) * fact(b3) * fact(b4) * fact(b5));
        sum += (t % 2 == 0) ? term : -term;
    }
    return pref * sum;
}

Matrix spherical_tensor(SpinValue s, int k, int q) {
    if (k < 0 || k > s.twice_s)
        throw std::invalid_argument("spherical_tensor: k must satisfy 0 <= k <= 2s");
    if (std::abs(q) > k) throw std::invalid_argument("spherical_tensor: |q| must be <= k");

    const int d = s.dim();
    Matrix t = Matrix::Zero(d, d);
    const double norm = std::sqrt((2.0 * k + 1.0) / d);
    // row index of |s,m>: i = (2s - 2m)/2 under the descending-m convention
    for (int col = 0; col < d; ++col) {
        const int two_m = s.twice_s - 2 * col;
        const int two_mp = two_m + 2 * q;
        if (std::abs(two_mp) > s.twice_s) continue;
        const int row = (s.twice_s - two_mp) / 2;
        t(row, col) = norm * clebsch_gordan(s.twice_s, two_m, 2 * k, 2 * q, s.twice_s, two_mp);
    }
    return t;
}

// ---------------- phase-space ingredients ----------------

Vector coherent_state(SpinValue s, double theta, double phi) {
    const int d = s.dim();
    const Complex iu(0.0, 1.0);
    const Matrix sy = (spin_raise(s) - spin_lower(s)) / (2.0 * iu);
    const Matrix rot = (-iu * theta * sy).exp();

    // exp(-i phi Sz) exp(-i theta Sy) |s, m=s>: the rotation carrying +z to (theta, phi)
    Vector v = rot.col(0);
    for (int i = 0; i < d; ++i) {
        const double m = 0.5 * (s.twice_s - 2 * i);
        v(i) *= std::exp(-iu * phi * m);
    }
    return v;
}

double assoc_legendre(int k, int q, double x) {
    if (q < 0 || k < q) throw std::invalid_argument("assoc_legendre: need k >= q >= 0");
    if (std::abs(x) > 1.0) throw std::domain_error("assoc_legendre: |x| must be <= 1");
    // std::assoc_legendre omits the Condon-Shortley phase; restore it here.
    const double sign = (q % 2 == 0) ? 1.0 : -1.0;
    return sign * std::assoc_legendre(static_cast<unsigned>(k), static_cast<unsigned>(q), x);
}

}  // namespace qsync::ops
