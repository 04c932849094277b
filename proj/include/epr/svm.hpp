// Linear soft-margin SVM (L1 hinge) trained by dual coordinate descent,
// with leave-one-out cross-validation over the shrink/standardize pipeline.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/features.hpp"

namespace epr {

struct LinearSvmModel {
    std::vector<double> weights;
    double bias = 0;
    double c = 1e4;
    std::size_t epochs = 0;
    double final_violation = 0;          // max projected-gradient violation at stop
    std::vector<double> dual_objective;  // maximization form, per epoch
    std::vector<double> alphas;          // dual variables at convergence
    std::vector<std::string> paths;

    double decision(const std::vector<double>& x) const {
        if (x.size() != weights.size())
            throw std::invalid_argument("svm: feature dimension mismatch");
        double d = bias;
        for (std::size_t i = 0; i < x.size(); ++i) d += weights[i] * x[i];
        return d;
    }
};

struct SvmPrediction {
    int label = +1;  // ties at exactly zero resolve to +1
    double margin = 0;
};

inline SvmPrediction predict(const LinearSvmModel& model, const std::vector<double>& x) {
    const double d = model.decision(x);
    return {d < 0 ? -1 : +1, d};
}

// Dual coordinate descent over alpha in [0, C]^n, fixed index order, bias
// via an augmented constant feature. Deterministic for identical inputs.
inline LinearSvmModel train_svm(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, double c = 1e4, double tol = 1e-4,
                                std::size_t max_epochs = 10000) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("svm: need at least two training points");
    if (y.size() != n) throw std::invalid_argument("svm: label count mismatch");
    const std::size_t d = x[0].size();
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i].size() != d) throw std::invalid_argument("svm: ragged feature rows");
        for (double v : x[i])
            if (!std::isfinite(v)) throw std::invalid_argument("svm: non-finite feature value");
        if (y[i] == +1) has_pos = true;
        else if (y[i] == -1) has_neg = true;
        else throw std::invalid_argument("svm: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw std::invalid_argument("svm: both classes must be present");

    // Augmented representation [x, 1]; Q_ii = ||x_i||^2 + 1 >= 1.
    std::vector<double> qdiag(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (double v : x[i]) s += v * v;
        qdiag[i] = s;
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(d + 1, 0.0);
    std::vector<double> objective;
    double alpha_sum = 0;
    std::size_t epoch = 0;
    double violation = std::numeric_limits<double>::infinity();
    for (; epoch < max_epochs; ++epoch) {
        violation = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double wx = w[d];
            for (std::size_t k = 0; k < d; ++k) wx += w[k] * x[i][k];
            const double g = y[i] * wx - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0)
                pg = std::min(g, 0.0);
            else if (alpha[i] >= c)
                pg = std::max(g, 0.0);
            violation = std::max(violation, std::abs(pg));
            if (pg == 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qdiag[i], 0.0, c);
            alpha_sum += alpha[i] - old;
            const double delta = (alpha[i] - old) * y[i];
            if (delta != 0.0) {
                for (std::size_t k = 0; k < d; ++k) w[k] += delta * x[i][k];
                w[d] += delta;
            }
        }
        double wnorm2 = 0;
        for (double v : w) wnorm2 += v * v;
        objective.push_back(alpha_sum - 0.5 * wnorm2);
        if (violation < tol) { ++epoch; break; }
    }

    LinearSvmModel model;
    model.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    model.bias = w[d];
    model.c = c;
    model.epochs = epoch;
    model.final_violation = violation;
    model.dual_objective = std::move(objective);
    model.alphas = std::move(alpha);
    return model;
}

// Maximization-form dual objective sum(alpha) - 0.5||w_aug||^2, used by the
// monotonicity property test.
inline double svm_dual_objective(const std::vector<std::vector<double>>& x,
                                 const std::vector<int>& y, const std::vector<double>& alpha) {
    const std::size_t n = x.size(), d = x[0].size();
    std::vector<double> w(d + 1, 0.0);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += alpha[i];
        for (std::size_t k = 0; k < d; ++k) w[k] += alpha[i] * y[i] * x[i][k];
        w[d] += alpha[i] * y[i];
    }
    double norm2 = 0;
    for (double v : w) norm2 += v * v;
    return sum - 0.5 * norm2;
}

// Lexicographically smaller label maps to -1.
inline std::pair<std::string, std::string> label_mapping(const std::vector<std::string>& labels) {
    std::vector<std::string> distinct;
    for (const auto& l : labels)
        if (std::find(distinct.begin(), distinct.end(), l) == distinct.end()) distinct.push_back(l);
    if (distinct.size() != 2)
        throw std::runtime_error("exactly two classes required, dataset has " +
                                 std::to_string(distinct.size()));
    std::sort(distinct.begin(), distinct.end());
    return {distinct[0], distinct[1]};  // (-1 label, +1 label)
}

struct CvFold {
    std::size_t index = 0;
    std::string true_label;
    std::string predicted_label;
    double margin = 0;
    std::size_t selected_dim = 0;
    bool failed = false;
    std::string error;
};

struct CvReport {
    double accuracy = 0;
    std::size_t n = 0;
    std::size_t correct = 0;
    std::string negative_label;
    std::string positive_label;
    bool paper_parity = false;
    double energy_fraction = 0.5;
    double c = 1e4;
    std::vector<CvFold> folds;
};

// Leave-one-out CV over a raw (unstandardized) feature matrix. By default
// shrinkage and standardization are fit per fold on the n-1 training rows;
// under paper_parity both are fit once on the full dataset.
inline CvReport loocv(const FeatureMatrix& raw, double c = 1e4, double energy_fraction = 0.5,
                      bool paper_parity = false, double tol = 1e-4,
                      std::size_t max_epochs = 10000) {
    raw.check_consistent();
    if (raw.rows < 3) throw std::runtime_error("loocv: need at least three examples");
    const auto [neg, pos] = label_mapping(raw.labels);

    CvReport report;
    report.n = raw.rows;
    report.negative_label = neg;
    report.positive_label = pos;
    report.paper_parity = paper_parity;
    report.energy_fraction = energy_fraction;
    report.c = c;

    std::vector<std::size_t> global_keep;
    StandardizationStats global_stats;
    if (paper_parity) {
        global_keep = shrink_select(raw, energy_fraction);
        FeatureMatrix sel = select_columns(raw, global_keep);
        FeatureMatrix std_sel = standardize(sel);
        global_stats.mean = std_sel.stat_mean;
        global_stats.stddev = std_sel.stat_std;
    }

    for (std::size_t hold = 0; hold < raw.rows; ++hold) {
        CvFold fold;
        fold.index = hold;
        fold.true_label = raw.labels[hold];
        try {
            FeatureMatrix train;
            train.rows = raw.rows - 1;
            train.cols = raw.cols;
            train.paths = raw.paths;
            for (std::size_t r = 0; r < raw.rows; ++r) {
                if (r == hold) continue;
                train.labels.push_back(raw.labels[r]);
                for (std::size_t ci = 0; ci < raw.cols; ++ci)
                    train.values.push_back(raw.at(r, ci));
            }

            std::vector<std::size_t> keep;
            StandardizationStats stats;
            if (paper_parity) {
                keep = global_keep;
                stats = global_stats;
            } else {
                keep = shrink_select(train, energy_fraction);
                if (keep.empty()) throw std::runtime_error("empty shrinkage selection");
                FeatureMatrix sel = select_columns(train, keep);
                FeatureMatrix std_sel = standardize(sel);
                stats.mean = std_sel.stat_mean;
                stats.stddev = std_sel.stat_std;
            }
            fold.selected_dim = keep.size();

            FeatureMatrix train_sel = select_columns(train, keep);
            FeatureMatrix train_std = standardize(train_sel, &stats);

            std::vector<std::vector<double>> xs(train_std.rows);
            std::vector<int> ys(train_std.rows);
            for (std::size_t r = 0; r < train_std.rows; ++r) {
                xs[r].assign(train_std.values.begin() + static_cast<std::ptrdiff_t>(r * train_std.cols),
                             train_std.values.begin() +
                                 static_cast<std::ptrdiff_t>((r + 1) * train_std.cols));
                ys[r] = train_std.labels[r] == pos ? +1 : -1;
            }
            LinearSvmModel model = train_svm(xs, ys, c, tol, max_epochs);

            std::vector<double> held;
            for (std::size_t ci = 0; ci < keep.size(); ++ci)
                held.push_back((raw.at(hold, keep[ci]) - stats.mean[ci]) / stats.stddev[ci]);
            const SvmPrediction pr = predict(model, held);
            fold.predicted_label = pr.label > 0 ? pos : neg;
            fold.margin = pr.margin;
            if (fold.predicted_label == fold.true_label) ++report.correct;
        } catch (const std::exception& e) {
            fold.failed = true;
            fold.error = e.what();
        }
        report.folds.push_back(fold);
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.n);
    return report;
}

// ---- EPSV model files --------------------------------------------------------
// magic "EPSV", version u32, d u32, C f64, bias f64, weights, paths, CRC32.

inline constexpr std::uint32_t kModelFormatVersion = 1;

inline std::string serialize_model(const LinearSvmModel& m) {
    std::string out = "EPSV";
    detail::put_u32(out, kModelFormatVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(m.weights.size()));
    detail::put_f64(out, m.c);
    detail::put_f64(out, m.bias);
    for (double w : m.weights) detail::put_f64(out, w);
    for (const auto& p : m.paths) {
        detail::put_u32(out, static_cast<std::uint32_t>(p.size()));
        out += p;
    }
    detail::put_u32(out, crc32(out));
    return out;
}

inline LinearSvmModel parse_model(const std::string& bytes) {
    if (bytes.size() < 8 || bytes.compare(0, 4, "EPSV") != 0)
        throw std::runtime_error("not an EPSV model file");
    const std::string body = bytes.substr(0, bytes.size() - 4);
    std::size_t tail = bytes.size() - 4;
    if (crc32(body) != detail::get_u32(bytes, tail))
        throw std::runtime_error("EPSV checksum mismatch (corrupt or truncated)");
    std::size_t pos = 4;
    const std::uint32_t version = detail::get_u32(bytes, pos);
    if (version != kModelFormatVersion)
        throw std::runtime_error("unsupported EPSV version " + std::to_string(version));
    LinearSvmModel m;
    const std::uint32_t d = detail::get_u32(bytes, pos);
    m.c = detail::get_f64(bytes, pos);
    m.bias = detail::get_f64(bytes, pos);
    m.weights.resize(d);
    for (auto& w : m.weights) w = detail::get_f64(bytes, pos);
    while (pos < body.size()) {
        const std::uint32_t len = detail::get_u32(bytes, pos);
        if (pos + len > body.size()) throw std::runtime_error("unexpected end of file");
        m.paths.push_back(bytes.substr(pos, len));
        pos += len;
    }
    return m;
}

}  // namespace epr
