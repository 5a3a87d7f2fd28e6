#pragma once

#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qsync {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

constexpr double pi = 3.14159265358979323846;

// Spin magnitude stored as 2s so half-integer arithmetic stays exact.
struct SpinValue {
    int twice_s = 1;

    static SpinValue from_twice(int t) {
        if (t < 0) throw std::invalid_argument("SpinValue: 2s must be >= 0");
        return SpinValue{t};
    }
    int dim() const { return twice_s + 1; }
    double value() const { return 0.5 * twice_s; }
};

inline SpinValue spin_half() { return SpinValue{1}; }
inline SpinValue spin_one() { return SpinValue{2}; }

// Selects one of the two units (qudit or transmon+resonator pair) of a model.
enum class Qubit { A, B };

// Tensor-factor dimensions of a product Hilbert space.
// Factor 0 is the leftmost Kronecker factor (slowest-varying index).
struct HilbertLayout {
    std::vector<int> dims;

    HilbertLayout() = default;
    explicit HilbertLayout(std::vector<int> d) : dims(std::move(d)) {
        for (int n : dims)
            if (n < 1) throw std::invalid_argument("HilbertLayout: factor dims must be >= 1");
    }
    static HilbertLayout single(int d) { return HilbertLayout{{d}}; }

    int total() const {
        return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
    }
    int n_factors() const { return static_cast<int>(dims.size()); }
};

}  // namespace qsync
