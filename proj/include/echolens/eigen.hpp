#ifndef ECHOLENS_EIGEN_HPP
#define ECHOLENS_EIGEN_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "echolens/types.hpp"

namespace echolens {

/// Dense row-major square matrix.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

struct EigenDecomposition {
    /// Ascending.
    std::vector<double> values;
    /// vectors[k] is the unit eigenvector of values[k], with its
    /// largest-magnitude component positive.
    std::vector<std::vector<double>> vectors;
    std::size_t sweeps = 0;
};

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Throws NumericError if the off-diagonal mass does not vanish within
/// `max_sweeps`.
inline EigenDecomposition symmetric_eigen(SquareMatrix m, std::size_t max_sweeps = 100) {
    const std::size_t n = m.n;
    SquareMatrix v(n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
        }
        return std::sqrt(s);
    };
    double scale = 0.0;
    for (double x : m.a) scale = std::max(scale, std::abs(x));

    EigenDecomposition out;
    std::size_t sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        const double off = off_norm();
        if (off <= 1e-15 * std::max(scale, 1e-300) || off == 0.0) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (apq == 0.0) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m(k, p);
                    const double mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m(p, k);
                    const double mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                m(p, q) = m(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && off_norm() > 1e-12 * std::max(scale, 1.0)) {
        throw NumericError("Jacobi eigensolver did not converge after " + std::to_string(max_sweeps) +
                           " sweeps (off-diagonal norm " + std::to_string(off_norm()) + ")");
    }
    out.sweeps = sweep;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return m(a, a) < m(b, b); });
    for (std::size_t k : idx) {
        out.values.push_back(m(k, k));
        std::vector<double> vec(n);
        double norm = 0.0;
        std::size_t big = 0;
        for (std::size_t i = 0; i < n; ++i) {
            vec[i] = v(i, k);
            norm += vec[i] * vec[i];
            if (std::abs(vec[i]) > std::abs(vec[big]) + 1e-12) big = i;
        }
        norm = std::sqrt(norm);
        const double sign = vec[big] < 0.0 ? -1.0 : 1.0;
        for (double& x : vec) x *= sign / norm;
        out.vectors.push_back(std::move(vec));
    }
    return out;
}

} // namespace echolens

#endif // ECHOLENS_EIGEN_HPP
