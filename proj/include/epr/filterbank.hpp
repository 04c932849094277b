// Temporal Gabor wavelets, spiral (octave) wavelets, and the separable
// multivariable filterbanks for both scattering orders.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/tonnetz.hpp"

namespace epr {

inline constexpr double kDefaultSigma = 0.1;
inline double default_xi() { return 2.0 * std::numbers::pi / 3.0; }

// Complex Gabor on the cyclic time axis, scale alpha = 2^-j:
// values[t] = alpha * exp(-alpha^2 tc^2 / (2 sigma^2)) * exp(i alpha xi tc)
// with tc the signed circular coordinate.
struct TemporalGabor {
    int scale_j = 0;
    double alpha = 1.0;
    double sigma = kDefaultSigma;
    double xi = 0.0;
    std::vector<cplx> values;

    double center_frequency() const { return alpha * xi; }
    double envelope_width() const { return sigma / alpha; }  // in samples
};

inline TemporalGabor temporal_gabor(int scale_j, std::size_t frames, double sigma = kDefaultSigma,
                                    double xi_freq = 2.0 * std::numbers::pi / 3.0) {
    if (scale_j < 0) throw std::invalid_argument("temporal_gabor: scale index must be >= 0");
    if (frames == 0 || (frames & (frames - 1)) != 0)
        throw std::invalid_argument("temporal_gabor: frame count must be a power of two");
    TemporalGabor g;
    g.scale_j = scale_j;
    g.alpha = std::ldexp(1.0, -scale_j);
    g.sigma = sigma;
    g.xi = xi_freq;
    if (g.center_frequency() > std::numbers::pi * (1.0 + 1e-12))
        throw std::invalid_argument("temporal_gabor: inadmissible center frequency " +
                                    std::to_string(g.center_frequency()) + " > pi");
    g.values.resize(frames);
    const std::ptrdiff_t T = static_cast<std::ptrdiff_t>(frames);
    for (std::ptrdiff_t t = 0; t < T; ++t) {
        const double tc = (t <= T / 2) ? static_cast<double>(t) : static_cast<double>(t - T);
        const double env = g.alpha * std::exp(-g.alpha * g.alpha * tc * tc / (2.0 * sigma * sigma));
        const double ph = g.alpha * xi_freq * tc;
        g.values[static_cast<std::size_t>(t)] = cplx(env * std::cos(ph), env * std::sin(ph));
    }
    return g;
}

// Gabor over signed circular octave offsets c in (-O/2, O/2], indexed by
// octave o with c = o for o <= O/2 and c = o - O otherwise. gamma2 = 0 is
// the constant octave-averaging filter; gamma2 = +-1 use the unit-amplitude
// convention (the leading gamma2 sign factor is dropped, it vanishes under
// the modulus).
struct SpiralGabor {
    int gamma2 = 0;
    double sigma = kDefaultSigma;
    double xi = 0.0;
    std::vector<cplx> values;  // indexed by octave o in [0, O)
};

inline SpiralGabor spiral_gabor(int gamma2, std::size_t octaves, double sigma = kDefaultSigma,
                                double xi_freq = 2.0 * std::numbers::pi / 3.0) {
    if (gamma2 < -1 || gamma2 > 1) throw std::invalid_argument("gamma2 must be in {-1,0,+1}");
    if (octaves == 0) throw std::invalid_argument("spiral_gabor: need at least one octave");
    SpiralGabor s;
    s.gamma2 = gamma2;
    s.sigma = sigma;
    s.xi = xi_freq;
    s.values.resize(octaves);
    const std::ptrdiff_t O = static_cast<std::ptrdiff_t>(octaves);
    for (std::ptrdiff_t o = 0; o < O; ++o) {
        if (gamma2 == 0) {
            s.values[static_cast<std::size_t>(o)] = cplx(1.0, 0.0);
            continue;
        }
        const double c = (o <= O / 2) ? static_cast<double>(o) : static_cast<double>(o - O);
        const double env = std::exp(-c * c / (2.0 * sigma * sigma));
        const double ph = gamma2 * xi_freq * c;
        s.values[static_cast<std::size_t>(o)] = cplx(env * std::cos(ph), env * std::sin(ph));
    }
    return s;
}

struct FilterbankConfig {
    int j1_scales = 8;
    int j2_scales = 8;
    double sigma = kDefaultSigma;
    double xi = 2.0 * std::numbers::pi / 3.0;
    std::vector<int> gamma2_set = {-1, 0, 1};
};

// First-order bank: separable pairs (temporal Gabor, eigentriad) indexed by
// (j1, beta1, q), j1 outer, beta1 middle, q inner.
struct TriadFilterbank {
    std::size_t frames = 0;
    std::size_t pitches = 0;
    std::vector<TemporalGabor> temporal;  // index j1
    std::vector<Eigentriad> pitch;        // index (beta1+1)*2 + q

    struct Entry {
        int j1;
        int beta1;
        int quality;
    };
    std::vector<Entry> filters;

    const TemporalGabor& temporal_part(const Entry& e) const { return temporal[e.j1]; }
    const Eigentriad& pitch_part(const Entry& e) const {
        return pitch[static_cast<std::size_t>((e.beta1 + 1) * 2 + e.quality)];
    }
};

inline TriadFilterbank build_triad_filterbank(const FilterbankConfig& cfg, std::size_t frames,
                                              std::size_t pitches) {
    if (cfg.j1_scales < 1) throw std::invalid_argument("filterbank: need at least one scale");
    TriadFilterbank fb;
    fb.frames = frames;
    fb.pitches = pitches;
    for (int j = 0; j < cfg.j1_scales; ++j)
        fb.temporal.push_back(temporal_gabor(j, frames, cfg.sigma, cfg.xi));
    for (int beta1 = -1; beta1 <= 1; ++beta1)
        for (int q = 0; q < 2; ++q) fb.pitch.push_back(eigentriad(beta1, q, pitches));
    for (int j = 0; j < cfg.j1_scales; ++j)
        for (int beta1 = -1; beta1 <= 1; ++beta1)
            for (int q = 0; q < 2; ++q) fb.filters.push_back({j, beta1, q});
    return fb;
}

enum class Coupling { Coarser, All };

// Second-order bank: separable triples (temporal Gabor, eigenprogression
// wavelet tiled mod 12, spiral Gabor over octaves). The pitch-quality part
// is h[p][q] = psi_tonnetz[p mod 12, q] * psi_spiral[octave(p)].
struct ProgFilterbank {
    std::size_t frames = 0;
    std::size_t pitch_pad = 0;  // multiple of 12
    Coupling coupling = Coupling::Coarser;
    std::vector<TemporalGabor> temporal;  // index j2
    std::vector<int> gamma2_set;
    std::size_t beta2_count = 0;

    // pitch_quality[(b2 * #gamma + gi)][q * pitch_pad + p]
    std::vector<std::vector<cplx>> pitch_quality;

    struct Entry {
        int j2;
        int beta2;
        int gamma2;
    };
    std::vector<Entry> filters;  // full (j2, beta2, gamma2) grid

    std::size_t pq_index(int beta2, std::size_t gamma_pos) const {
        return static_cast<std::size_t>(beta2) * gamma2_set.size() + gamma_pos;
    }
    std::vector<int> j2_for(int j1) const {
        std::vector<int> out;
        for (int j2 = 0; j2 < static_cast<int>(temporal.size()); ++j2)
            if (coupling == Coupling::All || j2 > j1) out.push_back(j2);
        return out;
    }
};

inline ProgFilterbank build_prog_filterbank(const FilterbankConfig& cfg,
                                            const EigenprogressionBasis& basis, std::size_t frames,
                                            std::size_t pitch_pad,
                                            Coupling coupling = Coupling::Coarser) {
    if (pitch_pad % 12 != 0 || pitch_pad == 0)
        throw std::invalid_argument("pitch dimension must be a multiple of 12");
    if (cfg.j2_scales < 1) throw std::invalid_argument("filterbank: need at least one scale");
    ProgFilterbank fb;
    fb.frames = frames;
    fb.pitch_pad = pitch_pad;
    fb.coupling = coupling;
    fb.gamma2_set = cfg.gamma2_set;
    fb.beta2_count = basis.size();
    for (int j = 0; j < cfg.j2_scales; ++j)
        fb.temporal.push_back(temporal_gabor(j, frames, cfg.sigma, cfg.xi));

    const std::size_t octaves = pitch_pad / 12;
    std::vector<SpiralGabor> spirals;
    for (int g : cfg.gamma2_set) spirals.push_back(spiral_gabor(g, octaves, cfg.sigma, cfg.xi));

    fb.pitch_quality.resize(basis.size() * cfg.gamma2_set.size());
    for (std::size_t b2 = 0; b2 < basis.size(); ++b2) {
        const auto& w = basis.wavelets[b2];
        for (std::size_t gi = 0; gi < spirals.size(); ++gi) {
            std::vector<cplx> h(2 * pitch_pad);
            for (std::size_t p = 0; p < pitch_pad; ++p) {
                const cplx spiral = spirals[gi].values[p / 12];
                for (int q = 0; q < 2; ++q)
                    h[q * pitch_pad + p] = w.at(static_cast<int>(p % 12), q) * spiral;
            }
            fb.pitch_quality[fb.pq_index(static_cast<int>(b2), gi)] = std::move(h);
        }
    }
    for (int j2 = 0; j2 < cfg.j2_scales; ++j2)
        for (std::size_t b2 = 0; b2 < basis.size(); ++b2)
            for (int g : cfg.gamma2_set)
                fb.filters.push_back({j2, static_cast<int>(b2), g});
    return fb;
}

// Per-temporal-filter diagnostics: center frequency, envelope width in
// samples, degenerate-envelope flag.
struct AdmissibilityRow {
    int scale_j = 0;
    double center_frequency = 0;
    double envelope_width = 0;
    bool sub_sample_envelope = false;
    bool above_nyquist = false;
};

inline std::vector<AdmissibilityRow> admissibility_report(const std::vector<TemporalGabor>& bank) {
    std::vector<AdmissibilityRow> rows;
    for (const auto& g : bank) {
        AdmissibilityRow r;
        r.scale_j = g.scale_j;
        r.center_frequency = g.center_frequency();
        r.envelope_width = g.envelope_width();
        r.sub_sample_envelope = r.envelope_width < 1.0;
        r.above_nyquist = r.center_frequency > std::numbers::pi;
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<AdmissibilityRow> admissibility_report(const TriadFilterbank& fb) {
    return admissibility_report(fb.temporal);
}
inline std::vector<AdmissibilityRow> admissibility_report(const ProgFilterbank& fb) {
    return admissibility_report(fb.temporal);
}

inline std::string admissibility_to_string(const std::vector<AdmissibilityRow>& rows) {
    std::ostringstream os;
    os << "scale_j,center_frequency,envelope_width_samples,sub_sample,above_nyquist\n";
    for (const auto& r : rows)
        os << r.scale_j << ',' << r.center_frequency << ',' << r.envelope_width << ','
           << (r.sub_sample_envelope ? 1 : 0) << ',' << (r.above_nyquist ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace epr
