// Dataset-level feature matrices: assembly from per-piece S1/S2 vectors,
// ablation by marginal summation, standardization, energy-based shrinkage
// selection, and the EPFM binary format.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/pianoroll.hpp"
#include "epr/scattering.hpp"

namespace epr {

struct StandardizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // population; zero-variance columns clamp to 1
};

struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
    std::vector<std::string> paths;   // length cols
    std::vector<std::string> labels;  // length rows
    // Present once standardize() has been applied.
    std::vector<double> stat_mean;
    std::vector<double> stat_std;
    // Provenance of a shrinkage selection, ascending original column indices.
    std::vector<std::size_t> shrinkage_mask;

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    bool standardized() const { return !stat_mean.empty(); }

    void check_consistent() const {
        if (paths.size() != cols || labels.size() != rows || values.size() != rows * cols)
            throw std::runtime_error("feature matrix: inconsistent dimensions");
        for (std::size_t i = 1; i < shrinkage_mask.size(); ++i)
            if (shrinkage_mask[i] <= shrinkage_mask[i - 1])
                throw std::runtime_error("feature matrix: mask not strictly increasing");
        if (!shrinkage_mask.empty() && shrinkage_mask.back() >= cols)
            throw std::runtime_error("feature matrix: mask index out of range");
    }
};

enum class AblationLevel { A1, A1B1, A1B1A2, A1B1A2B2, Full };

inline AblationLevel ablation_from_string(const std::string& s) {
    if (s == "a1") return AblationLevel::A1;
    if (s == "a1b1") return AblationLevel::A1B1;
    if (s == "a1b1a2") return AblationLevel::A1B1A2;
    if (s == "a1b1a2b2") return AblationLevel::A1B1A2B2;
    if (s == "full") return AblationLevel::Full;
    throw std::runtime_error("unknown ablation level '" + s +
                             "' (expected a1|a1b1|a1b1a2|a1b1a2b2|full)");
}

inline std::string ablation_to_string(AblationLevel a) {
    switch (a) {
        case AblationLevel::A1: return "a1";
        case AblationLevel::A1B1: return "a1b1";
        case AblationLevel::A1B1A2: return "a1b1a2";
        case AblationLevel::A1B1A2B2: return "a1b1a2b2";
        case AblationLevel::Full: return "full";
    }
    return "full";
}

// Per-piece inputs to assembly: the S1 rows and S2 rows as (path, value).
struct PieceFeatures {
    std::vector<std::pair<std::string, double>> s1;
    std::vector<std::pair<std::string, double>> s2;
};

// Ablation levels marginalize S2 over the excluded trailing path indices;
// `a1b1` is S1 itself and `a1` sums S1 over beta1.
inline FeatureMatrix assemble(const DatasetManifest& manifest,
                              const std::vector<PieceFeatures>& pieces, AblationLevel level) {
    if (manifest.entries.size() != pieces.size())
        throw std::runtime_error("assemble: piece count does not match manifest");
    if (pieces.empty()) throw std::runtime_error("assemble: empty dataset");

    auto truncate_path = [&](const std::string& full) -> std::string {
        const auto cut = [&](const std::string& key) {
            const auto pos = full.find("/" + key + "=");
            return pos == std::string::npos ? full : full.substr(0, pos);
        };
        switch (level) {
            case AblationLevel::A1: return full.substr(0, full.find("/b1="));
            case AblationLevel::A1B1: return full;  // S1 paths are already (j1, b1)
            case AblationLevel::A1B1A2: return cut("b2");
            case AblationLevel::A1B1A2B2: return cut("g2");
            case AblationLevel::Full: return full;
        }
        return full;
    };

    const bool use_s1 = (level == AblationLevel::A1 || level == AblationLevel::A1B1);

    // Column layout comes from the first piece; all others must agree.
    std::vector<std::string> cols;
    {
        const auto& rows = use_s1 ? pieces[0].s1 : pieces[0].s2;
        for (const auto& [path, value] : rows) {
            const std::string key = truncate_path(path);
            if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);
        }
    }

    FeatureMatrix m;
    m.rows = pieces.size();
    m.cols = cols.size();
    m.paths = cols;
    m.values.assign(m.rows * m.cols, 0.0);
    for (const auto& e : manifest.entries) m.labels.push_back(e.label);

    for (std::size_t r = 0; r < pieces.size(); ++r) {
        const auto& rows = use_s1 ? pieces[r].s1 : pieces[r].s2;
        std::size_t seen = 0;
        for (const auto& [path, value] : rows) {
            const std::string key = truncate_path(path);
            const auto it = std::find(cols.begin(), cols.end(), key);
            if (it == cols.end())
                throw std::runtime_error("assemble: config mismatch across pieces (unexpected path " +
                                         path + ")");
            m.at(r, static_cast<std::size_t>(it - cols.begin())) += value;
            ++seen;
        }
        if (seen == 0) throw std::runtime_error("assemble: piece has no feature rows");
    }
    m.check_consistent();
    return m;
}

// Fits population mean/std per column (or applies supplied stats). Columns
// with zero variance map to all-zeros with std recorded as 1.
inline FeatureMatrix standardize(const FeatureMatrix& x, const StandardizationStats* pre = nullptr) {
    FeatureMatrix out = x;
    if (pre == nullptr && x.rows < 2)
        throw std::runtime_error("standardize: need at least two rows to fit statistics");
    StandardizationStats st;
    if (pre) {
        if (pre->mean.size() != x.cols || pre->stddev.size() != x.cols)
            throw std::runtime_error("standardize: supplied statistics have wrong dimension");
        st = *pre;
    } else {
        st.mean.assign(x.cols, 0.0);
        st.stddev.assign(x.cols, 1.0);
        for (std::size_t c = 0; c < x.cols; ++c) {
            double mean = 0;
            for (std::size_t r = 0; r < x.rows; ++r) mean += x.at(r, c);
            mean /= static_cast<double>(x.rows);
            double var = 0;
            for (std::size_t r = 0; r < x.rows; ++r) {
                const double d = x.at(r, c) - mean;
                var += d * d;
            }
            var /= static_cast<double>(x.rows);
            st.mean[c] = mean;
            st.stddev[c] = var > 0 ? std::sqrt(var) : 1.0;
        }
    }
    for (std::size_t c = 0; c < x.cols; ++c)
        for (std::size_t r = 0; r < x.rows; ++r)
            out.at(r, c) = (x.at(r, c) - st.mean[c]) / st.stddev[c];
    out.stat_mean = st.mean;
    out.stat_std = st.stddev;
    return out;
}

// Columns ranked by mean squared value (descending, ties by ascending
// index); returns the shortest prefix reaching `energy_fraction` of the
// total energy. Requires raw (pre-standardization) values.
inline std::vector<std::size_t> shrink_select(const FeatureMatrix& x, double energy_fraction = 0.5) {
    if (x.standardized())
        throw std::runtime_error("shrink_select: selection must run on raw (unstandardized) values");
    if (energy_fraction <= 0.0 || energy_fraction > 1.0)
        throw std::runtime_error("shrink_select: energy fraction must be in (0, 1]");
    std::vector<double> energy(x.cols, 0.0);
    double total = 0;
    for (std::size_t c = 0; c < x.cols; ++c) {
        double e = 0;
        for (std::size_t r = 0; r < x.rows; ++r) e += x.at(r, c) * x.at(r, c);
        energy[c] = e / static_cast<double>(x.rows);
        total += energy[c];
    }
    if (total <= 0.0) return {};  // all-zero matrix: empty selection
    std::vector<std::size_t> order(x.cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (energy[a] != energy[b]) return energy[a] > energy[b];
        return a < b;
    });
    std::vector<std::size_t> keep;
    double acc = 0;
    for (std::size_t c : order) {
        if (energy[c] <= 0.0) break;
        keep.push_back(c);
        acc += energy[c];
        if (acc >= energy_fraction * total - 1e-12 * total) break;
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

// New matrix containing only the selected columns; records the mask.
inline FeatureMatrix select_columns(const FeatureMatrix& x, const std::vector<std::size_t>& keep) {
    FeatureMatrix out;
    out.rows = x.rows;
    out.cols = keep.size();
    out.labels = x.labels;
    out.values.assign(out.rows * out.cols, 0.0);
    for (std::size_t c = 0; c < keep.size(); ++c) {
        if (keep[c] >= x.cols) throw std::runtime_error("select_columns: index out of range");
        out.paths.push_back(x.paths[keep[c]]);
        for (std::size_t r = 0; r < x.rows; ++r) out.at(r, c) = x.at(r, keep[c]);
    }
    if (!x.stat_mean.empty()) {
        for (std::size_t c : keep) {
            out.stat_mean.push_back(x.stat_mean[c]);
            out.stat_std.push_back(x.stat_std[c]);
        }
    }
    out.shrinkage_mask = keep;
    return out;
}

// ---- CRC32 (polynomial 0xEDB88320) ---------------------------------------------

inline std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t seed = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

inline std::uint32_t crc32(const std::string& s) {
    return crc32(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

// ---- EPFM binary format -----------------------------------------------------------
// magic "EPFM", version u32, n u32, d u32, path table, label table, values
// (f64 row-major), optional stats block, optional mask block, trailing CRC32.

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

inline std::string serialize_features(const FeatureMatrix& m) {
    m.check_consistent();
    std::string out = "EPFM";
    detail::put_u32(out, kFeatureFormatVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols));
    auto put_str = [&](const std::string& s) {
        detail::put_u32(out, static_cast<std::uint32_t>(s.size()));
        out += s;
    };
    for (const auto& p : m.paths) put_str(p);
    for (const auto& l : m.labels) put_str(l);
    for (double v : m.values) detail::put_f64(out, v);
    out.push_back(m.standardized() ? 1 : 0);
    if (m.standardized()) {
        for (double v : m.stat_mean) detail::put_f64(out, v);
        for (double v : m.stat_std) detail::put_f64(out, v);
    }
    out.push_back(m.shrinkage_mask.empty() ? 0 : 1);
    if (!m.shrinkage_mask.empty()) {
        detail::put_u32(out, static_cast<std::uint32_t>(m.shrinkage_mask.size()));
        for (std::size_t i : m.shrinkage_mask) detail::put_u32(out, static_cast<std::uint32_t>(i));
    }
    detail::put_u32(out, crc32(out));
    return out;
}

inline FeatureMatrix parse_features(const std::string& bytes) {
    if (bytes.size() < 20 || bytes.compare(0, 4, "EPFM") != 0)
        throw std::runtime_error("not an EPFM feature file");
    const std::string body = bytes.substr(0, bytes.size() - 4);
    std::size_t tail = bytes.size() - 4;
    const std::uint32_t stored = detail::get_u32(bytes, tail);
    if (crc32(body) != stored) throw std::runtime_error("EPFM checksum mismatch (corrupt or truncated)");

    std::size_t pos = 4;
    const std::uint32_t version = detail::get_u32(bytes, pos);
    if (version != kFeatureFormatVersion)
        throw std::runtime_error("unsupported EPFM version " + std::to_string(version));
    FeatureMatrix m;
    m.rows = detail::get_u32(bytes, pos);
    m.cols = detail::get_u32(bytes, pos);
    auto get_str = [&]() {
        const std::uint32_t len = detail::get_u32(bytes, pos);
        if (pos + len > body.size()) throw std::runtime_error("unexpected end of file");
        std::string s = bytes.substr(pos, len);
        pos += len;
        return s;
    };
    for (std::size_t i = 0; i < m.cols; ++i) m.paths.push_back(get_str());
    for (std::size_t i = 0; i < m.rows; ++i) m.labels.push_back(get_str());
    m.values.resize(m.rows * m.cols);
    for (auto& v : m.values) v = detail::get_f64(bytes, pos);
    if (pos >= body.size()) throw std::runtime_error("unexpected end of file");
    if (bytes[pos++]) {
        m.stat_mean.resize(m.cols);
        m.stat_std.resize(m.cols);
        for (auto& v : m.stat_mean) v = detail::get_f64(bytes, pos);
        for (auto& v : m.stat_std) v = detail::get_f64(bytes, pos);
    }
    if (pos >= body.size()) throw std::runtime_error("unexpected end of file");
    if (bytes[pos++]) {
        const std::uint32_t k = detail::get_u32(bytes, pos);
        for (std::uint32_t i = 0; i < k; ++i) m.shrinkage_mask.push_back(detail::get_u32(bytes, pos));
    }
    m.check_consistent();
    return m;
}

}  // namespace epr
