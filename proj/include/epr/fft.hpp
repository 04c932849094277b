// FFT plans for exact cyclic convolution. Backed by FFTW when built with
// EPR_WITH_FFTW; otherwise a self-contained mixed-radix implementation
// (iterative radix-2 for powers of two, recursive Cooley-Tukey else).
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#ifdef EPR_WITH_FFTW
#include <fftw3.h>
#include <mutex>
#endif

namespace epr {

using cplx = std::complex<double>;

// Plain sqrt(re^2 + im^2); value ranges here never approach overflow, so
// the hypot slow path std::abs would take is unnecessary.
inline double modulus(const cplx& v) {
    return std::sqrt(v.real() * v.real() + v.imag() * v.imag());
}

// A reusable transform plan for one length. Forward is unscaled, inverse
// applies the 1/n factor, so inverse(forward(v)) == v.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("fft: length must be positive");
#ifdef EPR_WITH_FFTW
        std::lock_guard<std::mutex> lock(planner_mutex());
        std::vector<cplx> tmp(n);
        auto* raw = reinterpret_cast<fftw_complex*>(tmp.data());
        fwd_plan_ = fftw_plan_dft_1d(static_cast<int>(n), raw, raw, FFTW_FORWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
        inv_plan_ = fftw_plan_dft_1d(static_cast<int>(n), raw, raw, FFTW_BACKWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_plan_ || !inv_plan_) throw std::runtime_error("fft: fftw plan creation failed");
#else
        init_tables();
#endif
    }

    ~Fft() {
#ifdef EPR_WITH_FFTW
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (fwd_plan_) fftw_destroy_plan(fwd_plan_);
        if (inv_plan_) fftw_destroy_plan(inv_plan_);
#endif
    }

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;
    Fft(Fft&& other) noexcept { *this = std::move(other); }
    Fft& operator=(Fft&& other) noexcept {
        if (this != &other) {
            n_ = other.n_;
#ifdef EPR_WITH_FFTW
            std::swap(fwd_plan_, other.fwd_plan_);
            std::swap(inv_plan_, other.inv_plan_);
#else
            pow2_ = other.pow2_;
            twiddle_ = std::move(other.twiddle_);
            bitrev_ = std::move(other.bitrev_);
            factors_ = std::move(other.factors_);
            scratch_ = std::move(other.scratch_);
#endif
        }
        return *this;
    }

    std::size_t size() const { return n_; }

    void forward(cplx* data) const {
#ifdef EPR_WITH_FFTW
        auto* raw = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_plan_, raw, raw);
#else
        run(data, false);
#endif
    }

    void inverse(cplx* data) const {
#ifdef EPR_WITH_FFTW
        auto* raw = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(inv_plan_, raw, raw);
#else
        run(data, true);
#endif
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) data[i] *= s;
    }

    std::vector<cplx> forward(std::vector<cplx> v) const {
        check(v.size());
        forward(v.data());
        return v;
    }
    std::vector<cplx> inverse(std::vector<cplx> v) const {
        check(v.size());
        inverse(v.data());
        return v;
    }

private:
    void check(std::size_t m) const {
        if (m != n_) throw std::invalid_argument("fft: input length does not match plan");
    }

    std::size_t n_;

#ifdef EPR_WITH_FFTW
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }
    fftw_plan fwd_plan_ = nullptr;
    fftw_plan inv_plan_ = nullptr;
#else
    void init_tables() {
        const std::size_t n = n_;
        pow2_ = (n & (n - 1)) == 0;
        twiddle_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = cplx(std::cos(a), std::sin(a));
        }
        if (pow2_) {
            bitrev_.resize(n);
            std::size_t log2n = 0;
            while ((std::size_t{1} << log2n) < n) ++log2n;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t r = 0;
                for (std::size_t b = 0; b < log2n; ++b)
                    if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
                bitrev_[i] = r;
            }
        } else {
            std::size_t m = n;
            for (std::size_t f = 2; f * f <= m; ++f)
                while (m % f == 0) { factors_.push_back(f); m /= f; }
            if (m > 1) factors_.push_back(m);
            for (std::size_t f : factors_)
                if (f > kMaxRadix)
                    throw std::invalid_argument("fft: unsupported length (prime factor too large)");
            scratch_.resize(2 * n);
        }
    }

    cplx tw(std::size_t idx, bool inv) const {
        const cplx w = twiddle_[idx];
        return inv ? std::conj(w) : w;
    }

    void run(cplx* data, bool inv) const {
        if (n_ == 1) return;
        if (pow2_)
            run_pow2(data, inv);
        else
            run_mixed(data, scratch_.data(), n_, 0, inv);
    }

    void run_pow2(cplx* a, bool inv) const {
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j = bitrev_[i];
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len >> 1;
            const std::size_t step = n_ / len;
            for (std::size_t blk = 0; blk < n_; blk += len) {
                std::size_t tidx = 0;
                for (std::size_t j = 0; j < half; ++j, tidx += step) {
                    const cplx w = tw(tidx, inv);
                    const cplx u = a[blk + j];
                    const cplx v = a[blk + j + half] * w;
                    a[blk + j] = u + v;
                    a[blk + j + half] = u - v;
                }
            }
        }
    }

    // Decimation in time: gather the r interleaved sub-sequences into
    // scratch, transform each, recombine into data.
    void run_mixed(cplx* data, cplx* scratch, std::size_t n, std::size_t depth, bool inv) const {
        if (n == 1) return;
        const std::size_t r = factors_[depth];
        const std::size_t m = n / r;
        for (std::size_t j = 0; j < r; ++j) {
            cplx* sub = scratch + j * m;
            for (std::size_t k = 0; k < m; ++k) sub[k] = data[j + k * r];
            run_mixed(sub, scratch + n, m, depth + 1, inv);
        }
        const std::size_t rot = n_ / n;   // master-table step for W_n
        const std::size_t rrot = n_ / r;  // master-table step for W_r
        for (std::size_t k = 0; k < m; ++k) {
            cplx t[kMaxRadix];
            for (std::size_t j = 0; j < r; ++j)
                t[j] = scratch[j * m + k] * tw(j * k * rot, inv);
            for (std::size_t i = 0; i < r; ++i) {
                cplx acc = t[0];
                for (std::size_t j = 1; j < r; ++j)
                    acc += t[j] * tw(((i * j) % r) * rrot, inv);
                data[i * m + k] = acc;
            }
        }
    }

    static constexpr std::size_t kMaxRadix = 64;
    bool pow2_ = false;
    std::vector<cplx> twiddle_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::size_t> factors_;
    mutable std::vector<cplx> scratch_;
#endif
};

inline std::vector<cplx> fft(const std::vector<cplx>& v, bool inverse = false) {
    Fft plan(v.size());
    return inverse ? plan.inverse(v) : plan.forward(v);
}

}  // namespace epr
