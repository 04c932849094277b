// Triad graph operators, eigentriads, the 24-vertex Tonnetz Laplacian and
// its canonical eigenprogression wavelet basis.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/eigensolver.hpp"
#include "epr/fft.hpp"

namespace epr {

inline constexpr int kMajorThird = 4;  // semitones in a major third
inline constexpr int kMinorThird = 3;

inline std::array<int, 3> triad_intervals(int quality) {
    if (quality == 1) return {0, 4, 7};
    if (quality == 0) return {0, 3, 7};
    throw std::invalid_argument("triad quality must be 0 (minor) or 1 (major)");
}

// Unnormalized Laplacian of the complete graph on a triad's three pitches,
// embedded at the interval offsets.
struct TriadOperator {
    int quality = 1;
    std::array<int, 3> support{};
    std::array<std::array<double, 3>, 3> matrix{};
};

inline TriadOperator triad_operator(int quality) {
    TriadOperator op;
    op.quality = quality;
    op.support = triad_intervals(quality);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) op.matrix[i][j] = (i == j) ? 3.0 : 2.0;
    return op;
}

// Complex triad signal placing the 3-point DFT phases exp(2*pi*i*beta*n/3),
// n = 1..3, on the triad's pitches. Eigenvector of the embedded TriadOperator.
struct Eigentriad {
    int beta1 = 0;
    int quality = 1;
    std::vector<cplx> values;  // length P, non-zero only on the support
};

inline Eigentriad eigentriad(int beta1, int quality, std::size_t pitches) {
    if (beta1 < -1 || beta1 > 1) throw std::invalid_argument("beta1 must be in {-1,0,+1}");
    if (pitches < 12) throw std::invalid_argument("eigentriad: pitch dimension must be >= 12");
    Eigentriad e;
    e.beta1 = beta1;
    e.quality = quality;
    e.values.assign(pitches, cplx(0, 0));
    const auto iv = triad_intervals(quality);
    for (int n = 1; n <= 3; ++n) {
        const double a = 2.0 * std::numbers::pi * beta1 * n / 3.0;
        e.values[static_cast<std::size_t>(iv[n - 1])] = cplx(std::cos(a), std::sin(a));
    }
    return e;
}

// 24x24 Laplacian of the neo-Riemannian triad graph, vertices (p, q) with
// p in Z_12 and q in {0 minor, 1 major}, index p*2 + q. Stored in the
// positive-semidefinite convention 3I - A.
class TonnetzLaplacian {
public:
    static constexpr std::size_t kVertices = 24;

    TonnetzLaplacian() : m_(kVertices * kVertices, 0.0) {}

    double& at(int p, int q, int p2, int q2) { return m_[index(p, q) * kVertices + index(p2, q2)]; }
    double at(int p, int q, int p2, int q2) const {
        return m_[index(p, q) * kVertices + index(p2, q2)];
    }
    const std::vector<double>& matrix() const { return m_; }
    std::vector<double>& matrix() { return m_; }

    static std::size_t index(int p, int q) {
        return static_cast<std::size_t>(((p % 12 + 12) % 12) * 2 + ((q % 2 + 2) % 2));
    }

private:
    std::vector<double> m_;
};

// The three neighbors of a triad vertex: parallel plus the two third-related
// moves. For a major triad (p, 1): (p, 0), (p+4, 0), (p+9, 0).
inline std::vector<std::pair<int, int>> tonnetz_neighbors(int p, int q) {
    const int pc = ((p % 12) + 12) % 12;
    std::vector<std::pair<int, int>> nbrs;
    if (q == 1) {
        nbrs = {{pc, 0}, {(pc + kMajorThird) % 12, 0}, {(pc + kMajorThird + 5) % 12, 0}};
    } else if (q == 0) {
        nbrs = {{pc, 1}, {(pc - kMajorThird + 12) % 12, 1}, {(pc - kMajorThird - 5 + 24) % 12, 1}};
    } else {
        throw std::invalid_argument("quality must be 0 or 1");
    }
    return nbrs;
}

inline TonnetzLaplacian tonnetz_laplacian() {
    TonnetzLaplacian l;
    for (int p = 0; p < 12; ++p) {
        for (int q = 0; q < 2; ++q) {
            l.at(p, q, p, q) = 3.0;
            for (const auto& [p2, q2] : tonnetz_neighbors(p, q)) l.at(p, q, p2, q2) -= 1.0;
        }
    }
    return l;
}

// One canonical wavelet on the Tonnetz: values over (p, q), eigenvector of
// the Laplacian for eigenvalue `lambda`, with pitch-class frequency `omega`.
// For omega in {1..5} the wavelet is complex and its real/imaginary parts
// span a 2-dimensional eigensubspace; for omega in {0, 6} it is real.
struct EigenprogressionWavelet {
    int beta2 = 0;
    double lambda = 0;
    int omega = 0;
    bool two_dimensional = false;
    std::array<cplx, 24> values{};  // index p*2 + q

    cplx at(int p, int q) const { return values[TonnetzLaplacian::index(p, q)]; }
};

struct EigenprogressionBasis {
    std::vector<EigenprogressionWavelet> wavelets;

    std::size_t size() const { return wavelets.size(); }
};

namespace detail {

inline double wavelet_residual(const TonnetzLaplacian& l, const EigenprogressionWavelet& w) {
    // Real and imaginary parts are checked independently.
    double worst = 0;
    for (int part = 0; part < 2; ++part) {
        double norm2 = 0;
        for (const cplx& v : w.values) {
            const double x = part == 0 ? v.real() : v.imag();
            norm2 += x * x;
        }
        if (norm2 < 1e-30) continue;
        double acc = 0;
        for (std::size_t i = 0; i < TonnetzLaplacian::kVertices; ++i) {
            double r = 0;
            for (std::size_t j = 0; j < TonnetzLaplacian::kVertices; ++j) {
                const cplx v = w.values[j];
                r += l.matrix()[i * TonnetzLaplacian::kVertices + j] *
                     (part == 0 ? v.real() : v.imag());
            }
            const cplx v = w.values[i];
            r -= w.lambda * (part == 0 ? v.real() : v.imag());
            acc += r * r;
        }
        worst = std::max(worst, std::sqrt(acc));
    }
    return worst;
}

}  // namespace detail

// Canonical basis by joint diagonalization with the pitch translation
// p -> p+1 (mod 12), which commutes with the Laplacian. Each Fourier
// frequency omega in {0..6} contributes the two eigenvectors of its 2x2
// quality block; omega and 12-omega merge into one complex wavelet.
// Wavelets are sorted by (lambda, omega) and indexed consecutively.
inline EigenprogressionBasis eigenprogression_basis(const TonnetzLaplacian& l, double tol = 1e-10) {
    EigenprogressionBasis basis;
    for (int omega = 0; omega <= 6; ++omega) {
        const double theta = 2.0 * std::numbers::pi * omega / 12.0;
        const cplx z = std::polar(1.0, theta);
        // Coupling coefficient of the major row to the minor column.
        const cplx c = 1.0 + std::pow(z, 4) + std::pow(z, 9);
        const double mag = std::abs(c);
        for (int s : {+1, -1}) {
            EigenprogressionWavelet w;
            w.omega = omega;
            w.lambda = 3.0 - s * mag;
            w.two_dimensional = (omega != 0 && omega != 6);
            // Block eigenvector over (minor, major) components.
            cplx u[2];
            u[0] = cplx(1.0 / std::numbers::sqrt2, 0.0);
            u[1] = (mag > 0) ? cplx(s, 0) * c / mag / std::numbers::sqrt2
                             : cplx(s / std::numbers::sqrt2, 0.0);
            const double scale = w.two_dimensional ? 1.0 / std::sqrt(6.0) : 1.0 / std::sqrt(12.0);
            for (int p = 0; p < 12; ++p) {
                const cplx phase = std::polar(1.0, theta * p);
                for (int q = 0; q < 2; ++q)
                    w.values[TonnetzLaplacian::index(p, q)] = scale * phase * u[q];
            }
            basis.wavelets.push_back(w);
        }
    }
    std::stable_sort(basis.wavelets.begin(), basis.wavelets.end(),
                     [](const EigenprogressionWavelet& a, const EigenprogressionWavelet& b) {
                         if (a.lambda != b.lambda) return a.lambda < b.lambda;
                         return a.omega < b.omega;
                     });
    for (std::size_t i = 0; i < basis.wavelets.size(); ++i)
        basis.wavelets[i].beta2 = static_cast<int>(i);
    for (const auto& w : basis.wavelets) {
        const double r = detail::wavelet_residual(l, w);
        if (r > tol)
            throw std::runtime_error("eigenprogression basis: eigen-residual " + std::to_string(r) +
                                     " above tolerance for lambda=" + std::to_string(w.lambda));
    }
    return basis;
}

// Debug dump, one row per (beta2, lambda, omega, p, q, re, im).
inline std::string basis_to_csv(const EigenprogressionBasis& basis) {
    std::ostringstream os;
    os << "beta2,lambda,omega,p,q,re,im\n";
    os.precision(17);
    for (const auto& w : basis.wavelets)
        for (int p = 0; p < 12; ++p)
            for (int q = 0; q < 2; ++q) {
                const cplx v = w.at(p, q);
                os << w.beta2 << ',' << w.lambda << ',' << w.omega << ',' << p << ',' << q << ','
                   << v.real() << ',' << v.imag() << '\n';
            }
    return os.str();
}

}  // namespace epr
