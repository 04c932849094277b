// The two-order scattering transform over piano rolls: U1/S1 from the triad
// filterbank, U2/S2 from the eigenprogression filterbank. Convolutions are
// cyclic over (t, p, q) with t and p via FFT and q handled as Z_2.
//
// Tensors are stored dense with t fastest-varying. Per-slice layout is
// [q][p][t]; a (j1, beta1) slice holds both quality planes contiguously.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/fft.hpp"
#include "epr/filterbank.hpp"
#include "epr/pianoroll.hpp"
#include "epr/tonnetz.hpp"

namespace epr {

struct TransformConfig {
    std::size_t frames = 1024;
    std::size_t pitches = 128;
    std::size_t pitch_pad = 132;
    int j1_scales = 8;
    int j2_scales = 8;
    Coupling j2_coupling = Coupling::Coarser;
    double sigma = kDefaultSigma;
    double xi = 2.0 * std::numbers::pi / 3.0;
    std::vector<int> gamma2_set = {-1, 0, 1};

    void validate() const {
        if (frames == 0 || (frames & (frames - 1)) != 0)
            throw std::invalid_argument("config: frames must be a power of two");
        if (pitch_pad % 12 != 0 || pitch_pad == 0)
            throw std::invalid_argument("pitch dimension must be a multiple of 12");
        if (pitch_pad < pitches)
            throw std::invalid_argument("config: pitch_pad must be >= pitches");
        if (j1_scales < 1 || j2_scales < 1)
            throw std::invalid_argument("config: scale counts must be >= 1");
        if (gamma2_set.empty()) throw std::invalid_argument("config: gamma2_set must be non-empty");
        for (int g : gamma2_set)
            if (g < -1 || g > 1) throw std::invalid_argument("config: gamma2 values must be in {-1,0,+1}");
        for (std::size_t i = 0; i < gamma2_set.size(); ++i)
            for (std::size_t j = i + 1; j < gamma2_set.size(); ++j)
                if (gamma2_set[i] == gamma2_set[j])
                    throw std::invalid_argument("config: duplicate gamma2 value");
    }

    FilterbankConfig filterbank_config() const {
        FilterbankConfig fc;
        fc.j1_scales = j1_scales;
        fc.j2_scales = j2_scales;
        fc.sigma = sigma;
        fc.xi = xi;
        fc.gamma2_set = gamma2_set;
        return fc;
    }
};

// Rank-5 first-order tensor |x * Psi_triad|, indexed [t, p, q, j1, beta1].
struct ScatterTensor1 {
    std::size_t frames = 0;
    std::size_t pitch_pad = 0;
    int j1_scales = 0;
    std::vector<double> data;  // slice (j1, b1i) at [(j1*3+b1i)*2*P*T], layout [q][p][t]

    std::size_t slice_size() const { return 2 * pitch_pad * frames; }
    double* slice(int j1, int b1i) {
        return data.data() + static_cast<std::size_t>(j1 * 3 + b1i) * slice_size();
    }
    const double* slice(int j1, int b1i) const {
        return data.data() + static_cast<std::size_t>(j1 * 3 + b1i) * slice_size();
    }
    double at(std::size_t t, std::size_t p, int q, int j1, int beta1) const {
        return slice(j1, beta1 + 1)[(static_cast<std::size_t>(q) * pitch_pad + p) * frames + t];
    }
};

struct S1Matrix {
    int j1_scales = 0;
    std::vector<double> data;  // [j1][b1i]

    double at(int j1, int beta1) const { return data[static_cast<std::size_t>(j1 * 3 + beta1 + 1)]; }
    double& at(int j1, int beta1) { return data[static_cast<std::size_t>(j1 * 3 + beta1 + 1)]; }
};

struct FeaturePath {
    int j1 = 0;
    int beta1 = 0;
    int j2 = 0;
    int beta2 = 0;
    int gamma2 = 0;

    bool operator==(const FeaturePath&) const = default;

    static std::string signed_str(int v) { return v > 0 ? "+" + std::to_string(v) : std::to_string(v); }

    std::string to_string() const {
        return "j1=" + std::to_string(j1) + "/b1=" + signed_str(beta1) + "/j2=" + std::to_string(j2) +
               "/b2=" + std::to_string(beta2) + "/g2=" + signed_str(gamma2);
    }
};

struct S2Vector {
    std::vector<FeaturePath> paths;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

// Materialized rank-8 tensor, one [q][p][t] slice per feature path. Only
// sensible at small configurations; the pipeline reduces slice-by-slice
// through s2_streaming instead.
struct ScatterTensor2 {
    std::size_t frames = 0;
    std::size_t pitch_pad = 0;
    std::vector<FeaturePath> keys;
    std::vector<double> data;

    std::size_t slice_size() const { return 2 * pitch_pad * frames; }
    const double* slice(std::size_t k) const { return data.data() + k * slice_size(); }
    double* slice(std::size_t k) { return data.data() + k * slice_size(); }
    double at(std::size_t k, std::size_t t, std::size_t p, int q) const {
        return slice(k)[(static_cast<std::size_t>(q) * pitch_pad + p) * frames + t];
    }
};

class ScatteringEngine {
public:
    explicit ScatteringEngine(TransformConfig cfg)
        : ScatteringEngine(std::move(cfg), eigenprogression_basis(tonnetz_laplacian())) {}

    ScatteringEngine(TransformConfig cfg, EigenprogressionBasis basis)
        : cfg_(std::move(cfg)),
          basis_(std::move(basis)),
          fft_t_(cfg_.frames),
          fft_p_(cfg_.pitch_pad) {
        cfg_.validate();
        const auto fc = cfg_.filterbank_config();
        triad_ = build_triad_filterbank(fc, cfg_.frames, cfg_.pitch_pad);
        prog_ = build_prog_filterbank(fc, basis_, cfg_.frames, cfg_.pitch_pad, cfg_.j2_coupling);
        precompute_spectra();
        const std::size_t n = 2 * cfg_.pitch_pad * cfg_.frames;
        buf_slice_.resize(n);
        buf_route_.resize(n);
        buf_line_.resize(cfg_.frames);
        buf_tile_.resize(kTile * cfg_.pitch_pad);
        buf_mod_.resize(n);
    }

    const TransformConfig& config() const { return cfg_; }
    const EigenprogressionBasis& basis() const { return basis_; }
    const TriadFilterbank& triad_bank() const { return triad_; }
    const ProgFilterbank& prog_bank() const { return prog_; }

    // Zero-fills the pitch axis up to pitch_pad.
    PianoRoll pad(const PianoRoll& roll) const {
        if (roll.pitches == cfg_.pitch_pad) return roll;
        if (roll.pitches > cfg_.pitch_pad)
            throw std::invalid_argument("roll pitch dimension exceeds pitch_pad");
        PianoRoll out(roll.frames, cfg_.pitch_pad);
        for (std::size_t t = 0; t < roll.frames; ++t)
            for (std::size_t p = 0; p < roll.pitches; ++p) out.at(t, p) = roll.at(t, p);
        return out;
    }

    ScatterTensor1 u1(const PianoRoll& input) const {
        const std::size_t T = cfg_.frames, P = cfg_.pitch_pad;
        if (input.frames != T)
            throw std::invalid_argument("u1: roll frame count does not match config");
        if (input.pitches != cfg_.pitches && input.pitches != P)
            throw std::invalid_argument("u1: roll pitch count does not match config");
        const PianoRoll x = pad(input);

        ScatterTensor1 u;
        u.frames = T;
        u.pitch_pad = P;
        u.j1_scales = cfg_.j1_scales;
        u.data.assign(static_cast<std::size_t>(cfg_.j1_scales) * 3 * 2 * P * T, 0.0);

        // Spectrum of x along t only; the pitch part of every triad filter
        // has three taps, applied spatially.
        std::vector<cplx> xhat(P * T);
        for (std::size_t p = 0; p < P; ++p) {
            cplx* line = xhat.data() + p * T;
            for (std::size_t t = 0; t < T; ++t) line[t] = cplx(x.at(t, p), 0.0);
            fft_t_.forward(line);
        }

        std::vector<cplx> a(P * T);
        for (int j1 = 0; j1 < cfg_.j1_scales; ++j1) {
            const cplx* ht = spec_t1_[static_cast<std::size_t>(j1)].data();
            for (std::size_t p = 0; p < P; ++p) {
                const cplx* src = xhat.data() + p * T;
                cplx* dst = a.data() + p * T;
                for (std::size_t t = 0; t < T; ++t) dst[t] = src[t] * ht[t];
                fft_t_.inverse(dst);
            }
            for (int b1i = 0; b1i < 3; ++b1i) {
                for (int q = 0; q < 2; ++q) {
                    const auto iv = triad_intervals(q);
                    cplx w[3];
                    for (int n = 1; n <= 3; ++n) {
                        const double ang = 2.0 * std::numbers::pi * (b1i - 1) * n / 3.0;
                        w[n - 1] = cplx(std::cos(ang), std::sin(ang));
                    }
                    double* out = u.slice(j1, b1i) + static_cast<std::size_t>(q) * P * T;
                    for (std::size_t p = 0; p < P; ++p) {
                        const cplx* a0 = a.data() + ((p + P - iv[0]) % P) * T;
                        const cplx* a1 = a.data() + ((p + P - iv[1]) % P) * T;
                        const cplx* a2 = a.data() + ((p + P - iv[2]) % P) * T;
                        double* dst = out + p * T;
                        for (std::size_t t = 0; t < T; ++t) {
                            const cplx y = w[0] * a0[t] + w[1] * a1[t] + w[2] * a2[t];
                            dst[t] = modulus(y);
                        }
                    }
                }
            }
        }
        return u;
    }

    S1Matrix s1(const ScatterTensor1& u) const {
        S1Matrix m;
        m.j1_scales = u.j1_scales;
        m.data.assign(static_cast<std::size_t>(u.j1_scales) * 3, 0.0);
        const std::size_t n = u.slice_size();
        for (int j1 = 0; j1 < u.j1_scales; ++j1)
            for (int b1i = 0; b1i < 3; ++b1i) {
                const double* s = u.slice(j1, b1i);
                double acc = 0;
                for (std::size_t i = 0; i < n; ++i) acc += s[i];
                m.data[static_cast<std::size_t>(j1 * 3 + b1i)] = acc;
            }
        return m;
    }

    // Feature paths in deterministic order: j1, beta1, j2 (coupling), beta2,
    // gamma2 (as configured).
    std::vector<FeaturePath> s2_paths() const {
        std::vector<FeaturePath> out;
        for (int j1 = 0; j1 < cfg_.j1_scales; ++j1) {
            const auto j2set = prog_.j2_for(j1);
            for (int b1 = -1; b1 <= 1; ++b1)
                for (int j2 : j2set)
                    for (std::size_t b2 = 0; b2 < basis_.size(); ++b2)
                        for (int g : cfg_.gamma2_set)
                            out.push_back({j1, b1, j2, static_cast<int>(b2), g});
        }
        return out;
    }

    // (j1, beta1) slices dropped because the coupling rule leaves no j2.
    std::vector<std::pair<int, int>> omitted_slices() const {
        std::vector<std::pair<int, int>> out;
        for (int j1 = 0; j1 < cfg_.j1_scales; ++j1)
            if (prog_.j2_for(j1).empty())
                for (int b1 = -1; b1 <= 1; ++b1) out.emplace_back(j1, b1);
        return out;
    }

    S2Vector s2_streaming(const ScatterTensor1& u) const {
        S2Vector out;
        out.paths = s2_paths();
        out.values.assign(out.paths.size(), 0.0);
        std::map<std::tuple<int, int, int, int, int>, std::size_t> index;
        for (std::size_t i = 0; i < out.paths.size(); ++i) {
            const auto& p = out.paths[i];
            index[{p.j1, p.beta1, p.j2, p.beta2, p.gamma2}] = i;
        }
        run_second_order(u, /*need_modulus=*/false,
                         [&](const FeaturePath& key, const double*, std::size_t, double sum) {
                             out.values[index.at(
                                 {key.j1, key.beta1, key.j2, key.beta2, key.gamma2})] = sum;
                         });
        return out;
    }

    ScatterTensor2 u2(const ScatterTensor1& u) const {
        ScatterTensor2 t2;
        t2.frames = cfg_.frames;
        t2.pitch_pad = cfg_.pitch_pad;
        t2.keys = s2_paths();
        const std::size_t total = t2.keys.size() * t2.slice_size();
        if (total > (std::size_t{1} << 27))
            throw std::runtime_error("u2: materialized tensor too large; use s2_streaming");
        t2.data.assign(total, 0.0);
        std::map<std::tuple<int, int, int, int, int>, std::size_t> index;
        for (std::size_t i = 0; i < t2.keys.size(); ++i) {
            const auto& p = t2.keys[i];
            index[{p.j1, p.beta1, p.j2, p.beta2, p.gamma2}] = i;
        }
        run_second_order(
            u, /*need_modulus=*/true,
            [&](const FeaturePath& key, const double* modulus, std::size_t n, double) {
                double* dst = t2.slice(index.at({key.j1, key.beta1, key.j2, key.beta2, key.gamma2}));
                if (n != t2.slice_size())
                    tile_gamma0(modulus, dst);
                else
                    std::copy(modulus, modulus + n, dst);
            });
        return t2;
    }

    S2Vector s2(const ScatterTensor2& t2) const {
        S2Vector out;
        out.paths = t2.keys;
        out.values.assign(t2.keys.size(), 0.0);
        const std::size_t n = t2.slice_size();
        for (std::size_t k = 0; k < t2.keys.size(); ++k) {
            const double* s = t2.slice(k);
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i) acc += s[i];
            out.values[k] = acc;
        }
        return out;
    }

    // Returns a copy of the basis with wavelet `beta2` multiplied by
    // exp(i*phase) and optionally conjugated; used by identifiability checks.
    static EigenprogressionBasis rebase(const EigenprogressionBasis& basis, int beta2, double phase,
                                        bool conjugate) {
        EigenprogressionBasis out = basis;
        auto& w = out.wavelets.at(static_cast<std::size_t>(beta2));
        const cplx rot = std::polar(1.0, phase);
        for (auto& v : w.values) {
            if (conjugate) v = std::conj(v);
            v *= rot;
        }
        return out;
    }

private:
    static constexpr std::size_t kTile = 16;

    void precompute_spectra() {
        const std::size_t P = cfg_.pitch_pad;
        spec_t1_.clear();
        spec_t2_.clear();
        for (const auto& g : triad_.temporal) spec_t1_.push_back(fft_t_.forward(g.values));
        for (const auto& g : prog_.temporal) spec_t2_.push_back(fft_t_.forward(g.values));

        const std::size_t ng = cfg_.gamma2_set.size();
        spec_pq_.assign(basis_.size() * ng, {});
        spec_pq12_.assign(basis_.size() * ng, {});
        gamma_alias_.assign(ng, std::string::npos);
        for (std::size_t gi = 0; gi < ng; ++gi) gamma_alias_[gi] = gi;
        // gamma2 = -1 aliases to +1 when the two spiral wavelets coincide to
        // below 1e-18 per tap (the octave envelope is narrower than a sample,
        // so the oscillating factor only ever sees c = 0).
        {
            const std::size_t octaves = P / 12;
            const auto sp = spiral_gabor(+1, octaves, cfg_.sigma, cfg_.xi);
            const auto sm = spiral_gabor(-1, octaves, cfg_.sigma, cfg_.xi);
            double d = 0;
            for (std::size_t o = 0; o < octaves; ++o)
                d = std::max(d, std::abs(sp.values[o] - sm.values[o]));
            if (d < 1e-18) {
                std::size_t plus = std::string::npos, minus = std::string::npos;
                for (std::size_t gi = 0; gi < ng; ++gi) {
                    if (cfg_.gamma2_set[gi] == 1) plus = gi;
                    if (cfg_.gamma2_set[gi] == -1) minus = gi;
                }
                if (plus != std::string::npos && minus != std::string::npos)
                    gamma_alias_[minus] = plus;
            }
        }

        for (std::size_t b2 = 0; b2 < basis_.size(); ++b2) {
            for (std::size_t gi = 0; gi < ng; ++gi) {
                if (gamma_alias_[gi] != gi) continue;
                const int gamma = cfg_.gamma2_set[gi];
                if (gamma == 0) {
                    // Exactly 12-periodic in p: the (p, q) spectrum lives on
                    // the twelve bins kp = (P/12)*m. Stored as [kq][m].
                    std::vector<cplx> h12(24, cplx(0, 0));
                    const auto& w = basis_.wavelets[b2];
                    for (int kq = 0; kq < 2; ++kq)
                        for (int m = 0; m < 12; ++m) {
                            cplx acc = 0;
                            for (int q = 0; q < 2; ++q) {
                                cplx g = 0;
                                for (int r = 0; r < 12; ++r) {
                                    const double ang = -2.0 * std::numbers::pi * m * r / 12.0;
                                    g += w.at(r, q) * cplx(std::cos(ang), std::sin(ang));
                                }
                                acc += (q == 1 && kq == 1 ? -1.0 : 1.0) * g;
                            }
                            h12[static_cast<std::size_t>(kq * 12 + m)] =
                                acc * static_cast<double>(P / 12);
                        }
                    spec_pq12_[b2 * ng + gi] = std::move(h12);
                } else {
                    const auto& h = prog_.pitch_quality[prog_.pq_index(static_cast<int>(b2), gi)];
                    std::vector<cplx> hh(2 * P);
                    std::copy(h.begin(), h.end(), hh.begin());
                    fft_p_.forward(hh.data());
                    fft_p_.forward(hh.data() + P);
                    for (std::size_t kp = 0; kp < P; ++kp) {
                        const cplx r0 = hh[kp], r1 = hh[P + kp];
                        hh[kp] = r0 + r1;
                        hh[P + kp] = r0 - r1;
                    }
                    spec_pq_[b2 * ng + gi] = std::move(hh);
                }
            }
        }
    }

    // FFT along p for every (q, t) line of a [q][p][t] complex volume,
    // gathering tiles of consecutive t columns.
    void fft_p_axis(cplx* vol, bool inverse) const {
        const std::size_t T = cfg_.frames, P = cfg_.pitch_pad;
        for (int q = 0; q < 2; ++q) {
            cplx* plane = vol + static_cast<std::size_t>(q) * P * T;
            for (std::size_t t0 = 0; t0 < T; t0 += kTile) {
                const std::size_t w = std::min(kTile, T - t0);
                for (std::size_t p = 0; p < P; ++p) {
                    const cplx* src = plane + p * T + t0;
                    for (std::size_t k = 0; k < w; ++k) buf_tile_[k * P + p] = src[k];
                }
                for (std::size_t k = 0; k < w; ++k) {
                    if (inverse)
                        fft_p_.inverse(buf_tile_.data() + k * P);
                    else
                        fft_p_.forward(buf_tile_.data() + k * P);
                }
                for (std::size_t p = 0; p < P; ++p) {
                    cplx* dst = plane + p * T + t0;
                    for (std::size_t k = 0; k < w; ++k) dst[k] = buf_tile_[k * P + p];
                }
            }
        }
    }

    void fft_t_axis(cplx* vol, bool inverse) const {
        const std::size_t T = cfg_.frames, P = cfg_.pitch_pad;
        for (std::size_t line = 0; line < 2 * P; ++line) {
            cplx* ptr = vol + line * T;
            if (inverse)
                fft_t_.inverse(ptr);
            else
                fft_t_.forward(ptr);
        }
    }

    void fft_q_axis(cplx* vol, bool inverse) const {
        const std::size_t n = cfg_.pitch_pad * cfg_.frames;
        const double s = inverse ? 0.5 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx a = vol[i], b = vol[n + i];
            vol[i] = s * (a + b);
            vol[n + i] = s * (a - b);
        }
    }

    // Runs every second-order filter over every (j1, beta1) slice and hands
    // each resulting modulus volume (or its gamma2=0 reduced form) plus its
    // sum to `sink`. With need_modulus false only the sums are produced.
    // Sums accumulate in fixed storage order (q, then p, then t innermost).
    template <typename Sink>
    void run_second_order(const ScatterTensor1& u, bool need_modulus, Sink&& sink) const {
        const std::size_t T = cfg_.frames, P = cfg_.pitch_pad;
        if (u.frames != T || u.pitch_pad != P || u.j1_scales != cfg_.j1_scales)
            throw std::invalid_argument("u2: tensor does not match config");
        const std::size_t ng = cfg_.gamma2_set.size();
        const std::size_t n = 2 * P * T;

        std::vector<double> mod12;  // gamma2=0 reduced modulus, [q][r][t]
        for (int j1 = 0; j1 < cfg_.j1_scales; ++j1) {
            const auto j2set = prog_.j2_for(j1);
            if (j2set.empty()) continue;
            for (int b1i = 0; b1i < 3; ++b1i) {
                const double* slice = u.slice(j1, b1i);
                for (std::size_t i = 0; i < n; ++i) buf_slice_[i] = cplx(slice[i], 0.0);
                fft_t_axis(buf_slice_.data(), false);
                fft_p_axis(buf_slice_.data(), false);
                fft_q_axis(buf_slice_.data(), false);

                // gamma2 = 0 route: shared temporal inverse, then the sparse
                // twelve-bin (p, q) inverse per wavelet.
                std::size_t gi0 = std::string::npos;
                for (std::size_t gi = 0; gi < ng; ++gi)
                    if (cfg_.gamma2_set[gi] == 0) gi0 = gi;
                if (gi0 != std::string::npos) {
                    for (int j2 : j2set) {
                        const cplx* ht = spec_t2_[static_cast<std::size_t>(j2)].data();
                        for (std::size_t line = 0; line < 2 * P; ++line) {
                            const cplx* src = buf_slice_.data() + line * T;
                            cplx* dst = buf_route_.data() + line * T;
                            for (std::size_t t = 0; t < T; ++t) dst[t] = src[t] * ht[t];
                            fft_t_.inverse(dst);
                        }
                        for (std::size_t b2 = 0; b2 < basis_.size(); ++b2) {
                            const double sum = reduce_gamma0(buf_route_.data(), b2, gi0, mod12);
                            sink(FeaturePath{j1, b1i - 1, j2, static_cast<int>(b2), 0},
                                 mod12.data(), mod12.size(), sum);
                        }
                    }
                }

                // gamma2 = +-1 route: (p, q) inverse per wavelet, temporal
                // inverse per coupled scale. The pitch-quality multiply and
                // the q-axis inverse run fused.
                for (std::size_t b2 = 0; b2 < basis_.size(); ++b2) {
                    for (std::size_t gi = 0; gi < ng; ++gi) {
                        if (cfg_.gamma2_set[gi] == 0) continue;
                        if (gamma_alias_[gi] != gi) continue;  // filled from its alias below
                        const cplx* hpq = spec_pq_[b2 * ng + gi].data();
                        for (std::size_t kp = 0; kp < P; ++kp) {
                            const cplx w0 = hpq[kp];
                            const cplx w1 = hpq[P + kp];
                            const cplx* s0 = buf_slice_.data() + kp * T;
                            const cplx* s1 = buf_slice_.data() + (P + kp) * T;
                            cplx* d0 = buf_route_.data() + kp * T;
                            cplx* d1 = buf_route_.data() + (P + kp) * T;
                            for (std::size_t t = 0; t < T; ++t) {
                                const cplx a = s0[t] * w0;
                                const cplx b = s1[t] * w1;
                                d0[t] = 0.5 * (a + b);
                                d1[t] = 0.5 * (a - b);
                            }
                        }
                        fft_p_axis(buf_route_.data(), true);
                        for (int j2 : j2set) {
                            const cplx* ht = spec_t2_[static_cast<std::size_t>(j2)].data();
                            double sum = 0;
                            for (std::size_t line = 0; line < 2 * P; ++line) {
                                const cplx* src = buf_route_.data() + line * T;
                                cplx* y = buf_line_.data();
                                for (std::size_t t = 0; t < T; ++t) y[t] = src[t] * ht[t];
                                fft_t_.inverse(y);
                                if (need_modulus) {
                                    double* dst = buf_mod_.data() + line * T;
                                    for (std::size_t t = 0; t < T; ++t) {
                                        const double m = modulus(y[t]);
                                        dst[t] = m;
                                        sum += m;
                                    }
                                } else {
                                    for (std::size_t t = 0; t < T; ++t) sum += modulus(y[t]);
                                }
                            }
                            const FeaturePath key{j1, b1i - 1, j2, static_cast<int>(b2),
                                                  cfg_.gamma2_set[gi]};
                            sink(key, buf_mod_.data(), n, sum);
                            for (std::size_t go = 0; go < ng; ++go)
                                if (go != gi && gamma_alias_[go] == gi)
                                    sink(FeaturePath{j1, b1i - 1, j2, static_cast<int>(b2),
                                                     cfg_.gamma2_set[go]},
                                         buf_mod_.data(), n, sum);
                        }
                    }
                }
            }
        }
    }

    // The gamma2=0 response is exactly 12-periodic along p; mod12 holds
    // [q][r][t] with r = p mod 12. Returns the full-volume modulus sum (the
    // reduced tile scaled by the octave count), accumulated in fixed order.
    double reduce_gamma0(const cplx* z, std::size_t b2, std::size_t gi0,
                         std::vector<double>& mod12) const {
        const std::size_t T = cfg_.frames, P = cfg_.pitch_pad;
        const std::size_t ng = cfg_.gamma2_set.size();
        const cplx* h12 = spec_pq12_[b2 * ng + gi0].data();  // [kq][m]
        mod12.assign(2 * 12 * T, 0.0);
        const std::size_t step = P / 12;  // spectral stride between live bins
        const double scale = 12.0 / static_cast<double>(P);
        cplx v[2][12];
        for (std::size_t t = 0; t < T; ++t) {
            for (int m = 0; m < 12; ++m) {
                const std::size_t kp = static_cast<std::size_t>(m) * step;
                const cplx z0 = z[(0 * P + kp) * T + t] * h12[m];
                const cplx z1 = z[(1 * P + kp) * T + t] * h12[12 + m];
                v[0][m] = 0.5 * (z0 + z1);  // q-inverse
                v[1][m] = 0.5 * (z0 - z1);
            }
            for (int q = 0; q < 2; ++q) {
                fft_12_.inverse(v[q]);
                for (int r = 0; r < 12; ++r)
                    mod12[(static_cast<std::size_t>(q) * 12 + r) * T + t] = scale * modulus(v[q][r]);
            }
        }
        double sum = 0;
        for (double m : mod12) sum += m;
        return sum * static_cast<double>(P / 12);
    }

public:
    // Expands a gamma2=0 reduced modulus [q][r][t] back to [q][p][t].
    void tile_gamma0(const double* mod12, double* out) const {
        const std::size_t T = cfg_.frames, P = cfg_.pitch_pad;
        for (int q = 0; q < 2; ++q)
            for (std::size_t p = 0; p < P; ++p) {
                const double* src = mod12 + (static_cast<std::size_t>(q) * 12 + p % 12) * T;
                double* dst = out + (static_cast<std::size_t>(q) * P + p) * T;
                std::copy(src, src + T, dst);
            }
    }

private:
    TransformConfig cfg_;
    EigenprogressionBasis basis_;
    TriadFilterbank triad_;
    ProgFilterbank prog_;
    Fft fft_t_;
    Fft fft_p_;
    Fft fft_12_{12};

    std::vector<std::vector<cplx>> spec_t1_;
    std::vector<std::vector<cplx>> spec_t2_;
    std::vector<std::vector<cplx>> spec_pq_;    // dense [kq][kp] per (b2, gi)
    std::vector<std::vector<cplx>> spec_pq12_;  // sparse [kq][m] per (b2, gi) with gamma==0
    std::vector<std::size_t> gamma_alias_;

    mutable std::vector<cplx> buf_slice_;
    mutable std::vector<cplx> buf_route_;
    mutable std::vector<cplx> buf_line_;
    mutable std::vector<cplx> buf_tile_;
    mutable std::vector<double> buf_mod_;
};

// ---- CSV persistence of S1/S2 -------------------------------------------------

inline std::string s1_to_csv(const S1Matrix& m) {
    std::ostringstream os;
    os.precision(17);
    os << "path,value\n";
    for (int j1 = 0; j1 < m.j1_scales; ++j1)
        for (int b1 = -1; b1 <= 1; ++b1)
            os << "j1=" << j1 << "/b1=" << FeaturePath::signed_str(b1) << ',' << m.at(j1, b1) << '\n';
    return os.str();
}

inline std::string s2_to_csv(const S2Vector& v) {
    std::ostringstream os;
    os.precision(17);
    os << "path,value\n";
    for (std::size_t i = 0; i < v.size(); ++i)
        os << v.paths[i].to_string() << ',' << v.values[i] << '\n';
    return os.str();
}

namespace detail {

inline int parse_path_int(const std::string& s, const std::string& key) {
    const std::string pat = key + "=";
    const auto pos = s.find(pat);
    if (pos == std::string::npos) throw std::runtime_error("feature path missing " + key + ": " + s);
    return std::stoi(s.substr(pos + pat.size()));
}

}  // namespace detail

inline FeaturePath parse_feature_path(const std::string& s) {
    FeaturePath p;
    p.j1 = detail::parse_path_int(s, "j1");
    p.beta1 = detail::parse_path_int(s, "b1");
    p.j2 = detail::parse_path_int(s, "j2");
    p.beta2 = detail::parse_path_int(s, "b2");
    p.gamma2 = detail::parse_path_int(s, "g2");
    return p;
}

// Reads a `path,value` CSV produced by s1_to_csv/s2_to_csv.
inline std::vector<std::pair<std::string, double>> parse_path_value_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<std::string, double>> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        if (header) {
            if (detail::trim(line) != "path,value")
                throw std::runtime_error("expected header path,value");
            header = false;
            continue;
        }
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed feature row: " + line);
        rows.emplace_back(detail::trim(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    if (header) throw std::runtime_error("expected header path,value");
    return rows;
}

}  // namespace epr
