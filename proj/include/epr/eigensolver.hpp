// Dense symmetric eigendecomposition via cyclic Jacobi rotations.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace epr {

struct EigenDecomposition {
    std::size_t n = 0;
    std::vector<double> eigenvalues;   // ascending
    std::vector<double> eigenvectors;  // column k at [i*n + k], orthonormal

    double vector_at(std::size_t i, std::size_t k) const { return eigenvectors[i * n + k]; }
};

namespace detail {

inline double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(2.0 * s);
}

}  // namespace detail

// Cyclic-by-row Jacobi with threshold sweeps, capped at `max_sweeps`.
// Deterministic: fixed (i, j) sweep order; each eigenvector's first
// largest-magnitude entry is made positive.
inline EigenDecomposition symmetric_eigendecomposition(const std::vector<double>& m, std::size_t n,
                                                       double tol = 1e-12,
                                                       std::size_t max_sweeps = 100) {
    if (m.size() != n * n) throw std::invalid_argument("eigensolver: matrix size mismatch");
    double scale = 0;
    for (double v : m) scale = std::max(scale, std::abs(v));
    if (scale == 0) scale = 1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m[i * n + j] - m[j * n + i]) > tol * scale)
                throw std::invalid_argument("eigensolver: matrix is not symmetric within tolerance");

    std::vector<double> a = m;
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    const double stop = tol * scale * static_cast<double>(n);
    std::size_t sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        const double off = detail::off_diagonal_norm(a, n);
        if (off <= stop) break;
        // Small elements are skipped in early sweeps.
        const double thresh = (sweep < 3) ? 0.2 * off / static_cast<double>(n * n) : 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) <= thresh || apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p];
                    const double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && detail::off_diagonal_norm(a, n) > stop)
        throw std::runtime_error("eigensolver: no convergence after " + std::to_string(max_sweeps) +
                                 " sweeps (residual " +
                                 std::to_string(detail::off_diagonal_norm(a, n)) + ")");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a[x * n + x] < a[y * n + y]; });

    EigenDecomposition out;
    out.n = n;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.eigenvalues[k] = a[src * n + src];
        std::size_t arg = 0;
        double best = -1;
        for (std::size_t i = 0; i < n; ++i) {
            const double mag = std::abs(v[i * n + src]);
            if (mag > best) { best = mag; arg = i; }
        }
        const double sign = v[arg * n + src] < 0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors[i * n + k] = sign * v[i * n + src];
    }
    return out;
}

// Largest residual max_k ||M v_k - lambda_k v_k||_2; used by self checks.
inline double eigen_residual(const std::vector<double>& m, const EigenDecomposition& d) {
    const std::size_t n = d.n;
    double worst = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0;
            for (std::size_t j = 0; j < n; ++j) r += m[i * n + j] * d.vector_at(j, k);
            r -= d.eigenvalues[k] * d.vector_at(i, k);
            acc += r * r;
        }
        worst = std::max(worst, std::sqrt(acc));
    }
    return worst;
}

}  // namespace epr
