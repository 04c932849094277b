// Exact multidimensional cyclic convolution over Z_{N1} x ... x Z_{Nk}.
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "epr/fft.hpp"

namespace epr {

// Row-major layout, last axis fastest-varying.
class NdShape {
public:
    explicit NdShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw std::invalid_argument("shape: rank must be positive");
        total_ = 1;
        for (std::size_t d : dims_) {
            if (d == 0) throw std::invalid_argument("shape: zero-length axis");
            total_ *= d;
        }
    }
    std::size_t rank() const { return dims_.size(); }
    std::size_t axis(std::size_t a) const { return dims_[a]; }
    std::size_t total() const { return total_; }
    std::size_t stride(std::size_t a) const {
        std::size_t s = 1;
        for (std::size_t i = a + 1; i < dims_.size(); ++i) s *= dims_[i];
        return s;
    }
    const std::vector<std::size_t>& dims() const { return dims_; }

private:
    std::vector<std::size_t> dims_;
    std::size_t total_ = 0;
};

namespace detail {

// Applies `plan` along axis `a` of `data`, gathering strided lines.
inline void fft_axis(cplx* data, const NdShape& shape, std::size_t a, const Fft& plan,
                     bool inverse) {
    const std::size_t n = shape.axis(a);
    const std::size_t stride = shape.stride(a);
    const std::size_t total = shape.total();
    std::vector<cplx> line(n);
    // Enumerate every line: indices where axis a is zero.
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < total; base += block) {
        for (std::size_t off = 0; off < stride; ++off) {
            cplx* p = data + base + off;
            if (stride == 1) {
                if (inverse)
                    plan.inverse(p);
                else
                    plan.forward(p);
            } else {
                for (std::size_t k = 0; k < n; ++k) line[k] = p[k * stride];
                if (inverse)
                    plan.inverse(line.data());
                else
                    plan.forward(line.data());
                for (std::size_t k = 0; k < n; ++k) p[k * stride] = line[k];
            }
        }
    }
}

}  // namespace detail

// Exact cyclic convolution of two equal-shape complex arrays via the FFT.
inline std::vector<cplx> cyclic_convolve(std::span<const cplx> x, std::span<const cplx> h,
                                         const NdShape& shape) {
    if (x.size() != shape.total() || h.size() != shape.total())
        throw std::invalid_argument("cyclic_convolve: shape mismatch");
    std::vector<cplx> a(x.begin(), x.end());
    std::vector<cplx> b(h.begin(), h.end());
    std::map<std::size_t, Fft> plans;
    for (std::size_t ax = 0; ax < shape.rank(); ++ax)
        plans.try_emplace(shape.axis(ax), shape.axis(ax));
    for (std::size_t ax = 0; ax < shape.rank(); ++ax) {
        const Fft& plan = plans.at(shape.axis(ax));
        detail::fft_axis(a.data(), shape, ax, plan, false);
        detail::fft_axis(b.data(), shape, ax, plan, false);
    }
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    for (std::size_t ax = 0; ax < shape.rank(); ++ax)
        detail::fft_axis(a.data(), shape, ax, plans.at(shape.axis(ax)), true);
    return a;
}

inline std::vector<cplx> cyclic_convolve(const std::vector<cplx>& x, const std::vector<cplx>& h,
                                         const std::vector<std::size_t>& dims) {
    return cyclic_convolve(std::span<const cplx>(x), std::span<const cplx>(h), NdShape(dims));
}

// Direct O(N^2) summation; the reference the FFT path is checked against.
inline std::vector<cplx> direct_cyclic_convolve(std::span<const cplx> x, std::span<const cplx> h,
                                                const NdShape& shape) {
    if (x.size() != shape.total() || h.size() != shape.total())
        throw std::invalid_argument("cyclic_convolve: shape mismatch");
    const std::size_t total = shape.total();
    const std::size_t rank = shape.rank();
    std::vector<cplx> out(total, cplx(0, 0));
    std::vector<std::size_t> iv(rank), jv(rank), kv(rank);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rem = i;
        for (std::size_t a = 0; a < rank; ++a) {
            iv[a] = rem / shape.stride(a);
            rem %= shape.stride(a);
        }
        cplx acc = 0;
        for (std::size_t j = 0; j < total; ++j) {
            std::size_t rem2 = j;
            std::size_t kidx = 0;
            for (std::size_t a = 0; a < rank; ++a) {
                jv[a] = rem2 / shape.stride(a);
                rem2 %= shape.stride(a);
                kv[a] = (iv[a] + shape.axis(a) - jv[a]) % shape.axis(a);
                kidx += kv[a] * shape.stride(a);
            }
            acc += x[kidx] * h[j];
        }
        out[i] = acc;
    }
    return out;
}

inline std::vector<cplx> direct_cyclic_convolve(const std::vector<cplx>& x,
                                                const std::vector<cplx>& h,
                                                const std::vector<std::size_t>& dims) {
    return direct_cyclic_convolve(std::span<const cplx>(x), std::span<const cplx>(h), NdShape(dims));
}

}  // namespace epr
