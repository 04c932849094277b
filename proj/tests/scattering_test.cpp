#include <gtest/gtest.h>

#include <random>

#include "epr/convolution.hpp"
#include "epr/scattering.hpp"

using namespace epr;

namespace {

TransformConfig small_config() {
    TransformConfig cfg;
    cfg.frames = 16;
    cfg.pitches = 24;
    cfg.pitch_pad = 24;
    cfg.j1_scales = 2;
    cfg.j2_scales = 3;
    return cfg;
}

PianoRoll random_roll(std::mt19937& rng, std::size_t frames, std::size_t pitches,
                      double density = 0.2) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PianoRoll roll(frames, pitches);
    for (auto& v : roll.data) v = uni(rng) < density ? 1.0 : 0.0;
    return roll;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

TEST(U1, ZeroInputZeroOutput) {
    ScatteringEngine engine(small_config());
    const auto u = engine.u1(PianoRoll(16, 24));
    for (double v : u.data) EXPECT_DOUBLE_EQ(v, 0.0);
    const auto s = engine.s1(u);
    for (double v : s.data) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(U1, MatchesDirectConvolutionOracle) {
    const auto cfg = small_config();
    ScatteringEngine engine(cfg);
    std::mt19937 rng(99);
    PianoRoll x(16, 24);
    std::uniform_real_distribution<double> uni(0, 1);
    for (auto& v : x.data) v = uni(rng);
    const auto u = engine.u1(x);
    const std::size_t T = 16, P = 24;
    double worst = 0;
    for (int j1 = 0; j1 < cfg.j1_scales; ++j1)
        for (int b1 = -1; b1 <= 1; ++b1)
            for (int q = 0; q < 2; ++q) {
                const auto tg = temporal_gabor(j1, T, cfg.sigma, cfg.xi);
                const auto et = eigentriad(b1, q, P);
                std::vector<cplx> xs(T * P), hs(T * P);
                for (std::size_t t = 0; t < T; ++t)
                    for (std::size_t p = 0; p < P; ++p) {
                        xs[t * P + p] = x.at(t, p);
                        hs[t * P + p] = tg.values[t] * et.values[p];
                    }
                const auto y = direct_cyclic_convolve(xs, hs, {T, P});
                for (std::size_t t = 0; t < T; ++t)
                    for (std::size_t p = 0; p < P; ++p)
                        worst = std::max(worst,
                                         std::abs(std::abs(y[t * P + p]) - u.at(t, p, q, j1, b1)));
            }
    EXPECT_LT(worst, 1e-9);
}

TEST(U1, ImpulseGivesTranslatedFilterModulus) {
    const auto cfg = small_config();
    ScatteringEngine engine(cfg);
    PianoRoll x(16, 24);
    const std::size_t t0 = 5, p0 = 13;
    x.at(t0, p0) = 1.0;
    const auto u = engine.u1(x);
    const auto tg = temporal_gabor(1, 16, cfg.sigma, cfg.xi);
    const auto et = eigentriad(1, 1, 24);
    for (std::size_t t = 0; t < 16; ++t)
        for (std::size_t p = 0; p < 24; ++p) {
            const double expect =
                std::abs(tg.values[(t + 16 - t0) % 16]) * std::abs(et.values[(p + 24 - p0) % 24]);
            EXPECT_NEAR(u.at(t, p, 1, 1, 1), expect, 1e-12);
        }
}

TEST(U1, TimeShiftEquivariance) {
    ScatteringEngine engine(small_config());
    std::mt19937 rng(17);
    const PianoRoll x = random_roll(rng, 16, 24);
    const long dt = 6;
    const auto ua = engine.u1(x);
    const auto ub = engine.u1(time_shift(x, dt));
    for (int j1 = 0; j1 < 2; ++j1)
        for (int b1 = -1; b1 <= 1; ++b1)
            for (int q = 0; q < 2; ++q)
                for (std::size_t t = 0; t < 16; ++t)
                    for (std::size_t p = 0; p < 24; ++p)
                        EXPECT_NEAR(ub.at(t, p, q, j1, b1),
                                    ua.at((t + 16 - dt) % 16, p, q, j1, b1), 1e-12);
}

TEST(U1, SustainedMajorTriadFavorsZeroFrequencyChannel) {
    TransformConfig cfg = small_config();
    cfg.frames = 32;
    cfg.j1_scales = 5;
    ScatteringEngine engine(cfg);
    PianoRoll x(32, 24);
    for (std::size_t t = 0; t < 32; ++t)
        for (int p : {0, 4, 7}) x.at(t, p) = 1.0;
    const auto s = engine.s1(engine.u1(x));
    const int coarsest = cfg.j1_scales - 1;
    EXPECT_GT(s.at(coarsest, 0), s.at(coarsest, 1));
    EXPECT_GT(s.at(coarsest, 0), s.at(coarsest, -1));
}

TEST(S1, HomogeneousInInputScale) {
    ScatteringEngine engine(small_config());
    std::mt19937 rng(31);
    PianoRoll x = random_roll(rng, 16, 24);
    const auto base = engine.s1(engine.u1(x));
    PianoRoll scaled = x;
    for (auto& v : scaled.data) v *= 3.5;
    const auto big = engine.s1(engine.u1(scaled));
    for (std::size_t i = 0; i < base.data.size(); ++i)
        EXPECT_NEAR(big.data[i], 3.5 * base.data[i], 1e-9 * (1.0 + big.data[i]));
}

TEST(S1S2, ShiftAndTranspositionInvariance) {
    ScatteringEngine engine(small_config());
    std::mt19937 rng(41);
    std::uniform_int_distribution<long> dt(1, 15), dp(1, 23);
    for (int trial = 0; trial < 3; ++trial) {
        const PianoRoll x = random_roll(rng, 16, 24);
        const PianoRoll y = pitch_transpose(time_shift(x, dt(rng)), dp(rng));
        const auto ux = engine.u1(x);
        const auto uy = engine.u1(y);
        EXPECT_LT(rel_diff(engine.s1(ux).data, engine.s1(uy).data), 1e-9);
        EXPECT_LT(rel_diff(engine.s2_streaming(ux).values, engine.s2_streaming(uy).values), 1e-9);
    }
}

TEST(S1, InversionReflectsBeta1) {
    ScatteringEngine engine(small_config());
    std::mt19937 rng(43);
    const PianoRoll x = random_roll(rng, 16, 24);
    const auto a = engine.s1(engine.u1(pitch_invert(x)));
    const auto b = engine.s1(engine.u1(x));
    for (int j1 = 0; j1 < 2; ++j1)
        for (int b1 = -1; b1 <= 1; ++b1)
            EXPECT_NEAR(a.at(j1, b1), b.at(j1, -b1), 1e-9 * (1.0 + b.at(j1, -b1)));
}

TEST(S1, RetrogradeSensitivity) {
    TransformConfig cfg;
    cfg.frames = 128;
    cfg.pitches = 84;
    cfg.pitch_pad = 84;
    cfg.j1_scales = 8;
    cfg.j2_scales = 2;
    ScatteringEngine engine(cfg);
    PianoRoll x(128, 84);
    const int notes[3] = {60, 64, 67};
    std::size_t t = 0;
    for (int cyc = 0; cyc < 5; ++cyc)
        for (int n = 0; n < 3; ++n)
            for (std::size_t k = 0; k < 8 && t < 128; ++k, ++t) x.at(t, notes[n]) = 1.0;
    const auto a = engine.s1(engine.u1(x));
    const auto b = engine.s1(engine.u1(retrograde(x)));
    EXPECT_GT(rel_diff(b.data, a.data), 1e-2);
}

TEST(U2, ZeroInputZeroOutput) {
    ScatteringEngine engine(small_config());
    const auto u = engine.u1(PianoRoll(16, 24));
    const auto s2 = engine.s2_streaming(u);
    for (double v : s2.values) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(U2, MatchesDirectConvolutionOracle) {
    const auto cfg = small_config();
    ScatteringEngine engine(cfg);
    std::mt19937 rng(99);
    PianoRoll x(16, 24);
    std::uniform_real_distribution<double> uni(0, 1);
    for (auto& v : x.data) v = uni(rng);
    const auto u = engine.u1(x);
    const auto t2 = engine.u2(u);
    const auto& basis = engine.basis();
    const std::size_t T = 16, P = 24;
    double worst = 0;
    for (std::size_t k = 0; k < t2.keys.size(); ++k) {
        const auto key = t2.keys[k];
        std::vector<cplx> xs(T * P * 2), hs(T * P * 2);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t p = 0; p < P; ++p)
                for (int q = 0; q < 2; ++q)
                    xs[(t * P + p) * 2 + q] = u.at(t, p, q, key.j1, key.beta1);
        const auto tg = temporal_gabor(key.j2, T, cfg.sigma, cfg.xi);
        const auto sg = spiral_gabor(key.gamma2, P / 12, cfg.sigma, cfg.xi);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t p = 0; p < P; ++p)
                for (int q = 0; q < 2; ++q)
                    hs[(t * P + p) * 2 + q] = tg.values[t] *
                                              basis.wavelets[key.beta2].at(int(p % 12), q) *
                                              sg.values[p / 12];
        const auto y = direct_cyclic_convolve(xs, hs, {T, P, 2});
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t p = 0; p < P; ++p)
                for (int q = 0; q < 2; ++q)
                    worst = std::max(worst,
                                     std::abs(std::abs(y[(t * P + p) * 2 + q]) - t2.at(k, t, p, q)));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(U2, StreamingEqualsMaterializedReduction) {
    ScatteringEngine engine(small_config());
    std::mt19937 rng(55);
    const PianoRoll x = random_roll(rng, 16, 24);
    const auto u = engine.u1(x);
    const auto a = engine.s2(engine.u2(u));
    const auto b = engine.s2_streaming(u);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.paths[i], b.paths[i]);
        EXPECT_NEAR(a.values[i], b.values[i], 1e-12 * (1.0 + a.values[i]));
    }
}

TEST(U2, PhaseRebasingLeavesTensorUnchanged) {
    const auto cfg = small_config();
    ScatteringEngine engine(cfg);
    std::mt19937 rng(66);
    const PianoRoll x = random_roll(rng, 16, 24);
    const auto u = engine.u1(x);
    const auto base = engine.u2(u);
    std::uniform_real_distribution<double> phase(-3.0, 3.0);
    for (const auto& w : engine.basis().wavelets) {
        if (!w.two_dimensional) continue;
        ScatteringEngine rebased(cfg, ScatteringEngine::rebase(engine.basis(), w.beta2,
                                                               phase(rng), false));
        const auto moved = rebased.u2(rebased.u1(x));
        double worst = 0;
        for (std::size_t i = 0; i < base.data.size(); ++i)
            worst = std::max(worst, std::abs(base.data[i] - moved.data[i]));
        EXPECT_LT(worst, 1e-9) << "beta2 " << w.beta2;
    }
}

TEST(U2, ConjugationLeavesPitchQualityResponseModulusUnchanged) {
    // The conjugation half of the basis ambiguity cancels at the level of
    // the (p, q) convolution of a real input with the wavelet alone.
    const std::size_t T = 8, P = 24;
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uni(0, 1);
    const auto basis = eigenprogression_basis(tonnetz_laplacian());
    for (const auto& w : basis.wavelets) {
        if (!w.two_dimensional) continue;
        std::vector<cplx> xs(P * 2), hs(P * 2), hc(P * 2);
        for (std::size_t p = 0; p < P; ++p)
            for (int q = 0; q < 2; ++q) {
                hs[p * 2 + q] = w.at(int(p % 12), q);
                hc[p * 2 + q] = std::conj(w.at(int(p % 12), q)) * std::polar(1.0, 0.7);
            }
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t i = 0; i < P * 2; ++i) xs[i] = uni(rng) < 0.3 ? 1.0 : 0.0;
            const auto ya = cyclic_convolve(xs, hs, {P, 2ul});
            const auto yb = cyclic_convolve(xs, hc, {P, 2ul});
            for (std::size_t i = 0; i < ya.size(); ++i)
                EXPECT_NEAR(std::abs(ya[i]), std::abs(yb[i]), 1e-9);
        }
    }
}

TEST(S2, PathsAndOmittedSlices) {
    const auto cfg = small_config();  // J1=2, J2=3, coarser coupling
    ScatteringEngine engine(cfg);
    const auto paths = engine.s2_paths();
    // j1=0: j2 in {1,2}; j1=1: j2 in {2}; 3 beta1, 14 beta2, 3 gamma2.
    EXPECT_EQ(paths.size(), (2u + 1u) * 3u * 14u * 3u);
    EXPECT_TRUE(engine.omitted_slices().empty());

    TransformConfig flat = cfg;
    flat.j2_scales = 1;  // only j2=0, coarser than nothing
    ScatteringEngine none(flat);
    EXPECT_EQ(none.s2_paths().size(), 0u);
    EXPECT_EQ(none.omitted_slices().size(), 6u);
}

TEST(S2, CsvRoundTrip) {
    ScatteringEngine engine(small_config());
    std::mt19937 rng(88);
    const PianoRoll x = random_roll(rng, 16, 24);
    const auto s2 = engine.s2_streaming(engine.u1(x));
    const auto rows = parse_path_value_csv(s2_to_csv(s2));
    ASSERT_EQ(rows.size(), s2.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].first, s2.paths[i].to_string());
        EXPECT_DOUBLE_EQ(rows[i].second, s2.values[i]);
        EXPECT_EQ(parse_feature_path(rows[i].first), s2.paths[i]);
    }
    const auto s1 = engine.s1(engine.u1(x));
    const auto s1rows = parse_path_value_csv(s1_to_csv(s1));
    EXPECT_EQ(s1rows.size(), 6u);
    EXPECT_EQ(s1rows[0].first, "j1=0/b1=-1");
    EXPECT_EQ(s1rows[2].first, "j1=0/b1=+1");
}

TEST(Engine, RejectsMismatchedRolls) {
    ScatteringEngine engine(small_config());
    EXPECT_THROW((void)engine.u1(PianoRoll(32, 24)), std::invalid_argument);
    EXPECT_THROW((void)engine.u1(PianoRoll(16, 25)), std::invalid_argument);
}

TEST(Engine, ConfigValidation) {
    TransformConfig cfg = small_config();
    cfg.pitch_pad = 25;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.frames = 20;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.gamma2_set = {0, 0};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.gamma2_set = {2};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Engine, PadZeroFills) {
    TransformConfig cfg = small_config();
    cfg.pitches = 20;
    cfg.pitch_pad = 24;
    ScatteringEngine engine(cfg);
    PianoRoll x(16, 20);
    x.at(3, 19) = 2.0;
    const auto y = engine.pad(x);
    EXPECT_EQ(y.pitches, 24u);
    EXPECT_DOUBLE_EQ(y.at(3, 19), 2.0);
    for (std::size_t t = 0; t < 16; ++t)
        for (std::size_t p = 20; p < 24; ++p) EXPECT_DOUBLE_EQ(y.at(t, p), 0.0);
}
