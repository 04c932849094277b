// File-based pipeline stages: rasterize -> transform -> features -> crossval.
// Stages communicate through the work directory and skip up-to-date outputs
// by content hash, so expensive transforms are cached across experiments.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "epr/config.hpp"
#include "epr/features.hpp"
#include "epr/midi.hpp"
#include "epr/pianoroll.hpp"
#include "epr/scattering.hpp"
#include "epr/svm.hpp"

namespace epr {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Stable per-piece file stem: manifest row index plus source basename.
inline std::string piece_stem(std::size_t index, const std::string& path) {
    std::ostringstream os;
    os << std::setw(3) << std::setfill('0') << index << '_' << fs::path(path).stem().string();
    return os.str();
}

struct StageSummary {
    std::size_t ok = 0;
    std::size_t failed = 0;
    std::size_t skipped = 0;
    std::vector<std::string> failures;

    std::string to_string() const {
        std::ostringstream os;
        os << ok << " ok, " << failed << " failed";
        if (skipped) os << ", " << skipped << " skipped";
        return os.str();
    }
};

// Manifest entry paths resolve relative to the manifest file's directory.
inline DatasetManifest load_manifest(const RunConfig& cfg) {
    if (cfg.manifest.empty()) throw std::runtime_error("no manifest configured (use --manifest)");
    DatasetManifest m = parse_manifest(read_file(cfg.manifest));
    const fs::path base = fs::path(cfg.manifest).parent_path();
    for (auto& e : m.entries) {
        const fs::path p(e.path);
        if (p.is_relative() && !base.empty()) e.path = (base / p).string();
    }
    return m;
}

// Records enough provenance in the work directory to reproduce a run: the
// effective configuration, its hash, and the user's config file verbatim.
inline void persist_run_config(const RunConfig& cfg) {
    fs::create_directories(cfg.workdir);
    write_file(fs::path(cfg.workdir) / "run_config.cfg", config_to_string(cfg));
    if (!cfg.config_source.empty() && fs::exists(cfg.config_source))
        write_file(fs::path(cfg.workdir) / "config.orig.cfg", read_file(cfg.config_source));
    json meta;
    meta["transform_config_hash"] = transform_config_hash(cfg);
    write_file(fs::path(cfg.workdir) / "run_meta.json", meta.dump(2) + "\n");
}

inline std::vector<NoteEvent> parse_piece_file(const fs::path& path) {
    const std::string bytes = read_file(path);
    const std::string ext = path.extension().string();
    if (ext == ".mid" || ext == ".midi" || ext == ".smf") return parse_midi(bytes);
    if (ext == ".csv" || ext == ".notes") return parse_note_csv(bytes);
    // Fall back on content sniffing.
    if (bytes.rfind("MThd", 0) == 0) return parse_midi(bytes);
    return parse_note_csv(bytes);
}

inline StageSummary run_rasterize(const RunConfig& cfg, std::ostream& log) {
    const DatasetManifest manifest = load_manifest(cfg);
    persist_run_config(cfg);
    const fs::path rolls = fs::path(cfg.workdir) / "rolls";
    fs::create_directories(rolls);
    StageSummary sum;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& entry = manifest.entries[i];
        const std::string stem = piece_stem(i, entry.path);
        const fs::path roll_path = rolls / (stem + ".eprl");
        const fs::path meta_path = rolls / (stem + ".meta.json");
        try {
            const std::string input = read_file(entry.path);
            const std::uint32_t input_hash = crc32(input);
            json want;
            want["input_hash"] = input_hash;
            want["frames"] = cfg.transform.frames;
            want["pitches"] = cfg.transform.pitches;
            want["velocity_weighting"] = cfg.velocity_weighting;
            if (fs::exists(roll_path) && fs::exists(meta_path)) {
                try {
                    const json have = json::parse(read_file(meta_path));
                    if (have == want) {
                        ++sum.skipped;
                        continue;
                    }
                } catch (...) {
                }
            }
            const auto notes = parse_piece_file(entry.path);
            const PianoRoll roll =
                rasterize(notes, cfg.transform.frames, cfg.transform.pitches, !cfg.velocity_weighting);
            write_file(roll_path, serialize_roll(roll));
            write_file(meta_path, want.dump(2) + "\n");
            ++sum.ok;
        } catch (const std::exception& e) {
            ++sum.failed;
            sum.failures.push_back(entry.path + ": " + e.what());
        }
    }
    log << "rasterize: " << sum.to_string() << '\n';
    for (const auto& f : sum.failures) log << "  failed " << f << '\n';
    return sum;
}

inline StageSummary run_transform(const RunConfig& cfg, std::ostream& log) {
    const DatasetManifest manifest = load_manifest(cfg);
    persist_run_config(cfg);
    const fs::path rolls = fs::path(cfg.workdir) / "rolls";
    const fs::path feats = fs::path(cfg.workdir) / "features";
    fs::create_directories(feats);
    const std::uint32_t cfg_hash = transform_config_hash(cfg);

    struct Job {
        std::size_t index;
        std::string stem;
    };
    std::vector<Job> jobs;
    StageSummary sum;
    std::mutex mtx;

    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        jobs.push_back({i, piece_stem(i, manifest.entries[i].path)});

    std::size_t workers = cfg.workers ? cfg.workers : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min(workers, jobs.size() ? jobs.size() : std::size_t{1});

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        // One engine per worker; engines hold scratch buffers.
        ScatteringEngine engine(cfg.transform);
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs.size()) break;
            const Job& job = jobs[k];
            const fs::path roll_path = rolls / (job.stem + ".eprl");
            const fs::path s1_path = feats / (job.stem + ".s1.csv");
            const fs::path s2_path = feats / (job.stem + ".s2.csv");
            const fs::path meta_path = feats / (job.stem + ".meta.json");
            try {
                if (!fs::exists(roll_path))
                    throw std::runtime_error("missing piano roll " + roll_path.string() +
                                             "; run `epr rasterize` first");
                const std::string roll_bytes = read_file(roll_path);
                const std::uint32_t roll_hash = crc32(roll_bytes);
                json want;
                want["roll_hash"] = roll_hash;
                want["config_hash"] = cfg_hash;
                if (fs::exists(s1_path) && fs::exists(s2_path) && fs::exists(meta_path)) {
                    try {
                        json have = json::parse(read_file(meta_path));
                        if (have.contains("roll_hash") && have["roll_hash"] == roll_hash &&
                            have.contains("config_hash") && have["config_hash"] == cfg_hash) {
                            std::lock_guard<std::mutex> lock(mtx);
                            ++sum.skipped;
                            continue;
                        }
                    } catch (...) {
                    }
                }
                const PianoRoll roll = parse_roll(roll_bytes);
                if (roll.frames != cfg.transform.frames)
                    throw std::runtime_error("roll frame count " + std::to_string(roll.frames) +
                                             " does not match configured frames " +
                                             std::to_string(cfg.transform.frames));
                if (roll.pitches != cfg.transform.pitches &&
                    roll.pitches != cfg.transform.pitch_pad)
                    throw std::runtime_error("roll pitch count " + std::to_string(roll.pitches) +
                                             " does not match configured pitches/pitch_pad");
                const ScatterTensor1 u = engine.u1(roll);
                const S1Matrix s1m = engine.s1(u);
                const S2Vector s2v = engine.s2_streaming(u);
                json meta = want;
                meta["s1_rows"] = s1m.data.size();
                meta["s2_paths"] = s2v.size();
                meta["beta2_count"] = engine.basis().size();
                json omitted = json::array();
                for (const auto& [j1, b1] : engine.omitted_slices())
                    omitted.push_back({{"j1", j1}, {"b1", b1}});
                meta["omitted_slices"] = omitted;
                write_file(s1_path, s1_to_csv(s1m));
                write_file(s2_path, s2_to_csv(s2v));
                write_file(meta_path, meta.dump(2) + "\n");
                std::lock_guard<std::mutex> lock(mtx);
                ++sum.ok;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mtx);
                ++sum.failed;
                sum.failures.push_back(job.stem + ": " + e.what());
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    log << "transform: " << sum.to_string() << '\n';
    for (const auto& f : sum.failures) log << "  failed " << f << '\n';
    return sum;
}

// Loads per-piece S1/S2 rows, verifying every piece was transformed under
// one configuration.
inline std::vector<PieceFeatures> load_piece_features(const RunConfig& cfg,
                                                      const DatasetManifest& manifest) {
    const fs::path feats = fs::path(cfg.workdir) / "features";
    const std::uint32_t cfg_hash = transform_config_hash(cfg);
    std::vector<PieceFeatures> out;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const std::string stem = piece_stem(i, manifest.entries[i].path);
        const fs::path s1_path = feats / (stem + ".s1.csv");
        const fs::path s2_path = feats / (stem + ".s2.csv");
        const fs::path meta_path = feats / (stem + ".meta.json");
        if (!fs::exists(s1_path) || !fs::exists(s2_path))
            throw std::runtime_error("missing features for " + stem + "; run `epr transform` first");
        if (fs::exists(meta_path)) {
            const json meta = json::parse(read_file(meta_path));
            if (meta.contains("config_hash") &&
                meta["config_hash"].get<std::uint32_t>() != cfg_hash)
                throw std::runtime_error("features for " + stem +
                                         " were produced under a different config; rerun `epr "
                                         "transform`");
        }
        PieceFeatures pf;
        pf.s1 = parse_path_value_csv(read_file(s1_path));
        pf.s2 = parse_path_value_csv(read_file(s2_path));
        out.push_back(std::move(pf));
    }
    return out;
}

inline FeatureMatrix run_features(const RunConfig& cfg, std::ostream& log) {
    const DatasetManifest manifest = load_manifest(cfg);
    persist_run_config(cfg);
    const auto pieces = load_piece_features(cfg, manifest);
    FeatureMatrix m = assemble(manifest, pieces, cfg.ablation_level);
    // Global selection and statistics are recorded for provenance; CV refits
    // per fold unless paper parity is requested.
    const auto keep = shrink_select(m, cfg.energy_fraction);
    FeatureMatrix annotated = m;
    annotated.shrinkage_mask = keep;
    write_file(fs::path(cfg.workdir) / "features.epfm", serialize_features(annotated));
    log << "features: " << m.rows << " pieces x " << m.cols << " columns (ablation "
        << ablation_to_string(cfg.ablation_level) << "), " << keep.size()
        << " columns at energy fraction " << cfg.energy_fraction << '\n';
    return annotated;
}

inline json cv_report_to_json(const CvReport& r, const RunConfig& cfg, std::size_t feature_dim) {
    json j;
    j["accuracy"] = r.accuracy;
    j["n"] = r.n;
    j["correct"] = r.correct;
    j["negative_label"] = r.negative_label;
    j["positive_label"] = r.positive_label;
    j["paper_parity"] = r.paper_parity;
    j["energy_fraction"] = r.energy_fraction;
    j["svm_c"] = r.c;
    j["ablation"] = ablation_to_string(cfg.ablation_level);
    j["feature_dim"] = feature_dim;
    j["folds"] = json::array();
    for (const auto& f : r.folds) {
        json fj;
        fj["index"] = f.index;
        fj["true"] = f.true_label;
        fj["predicted"] = f.predicted_label;
        fj["margin"] = f.margin;
        fj["selected_dim"] = f.selected_dim;
        if (f.failed) fj["error"] = f.error;
        j["folds"].push_back(fj);
    }
    return j;
}

inline CvReport run_crossval(const RunConfig& cfg, std::ostream& log) {
    const DatasetManifest manifest = load_manifest(cfg);
    validate_two_classes(manifest);
    persist_run_config(cfg);
    const auto pieces = load_piece_features(cfg, manifest);
    const FeatureMatrix raw = assemble(manifest, pieces, cfg.ablation_level);
    const CvReport report =
        loocv(raw, cfg.svm_c, cfg.energy_fraction, cfg.paper_parity, cfg.svm_tol, cfg.svm_max_iter);

    write_file(fs::path(cfg.workdir) / "crossval.json",
               cv_report_to_json(report, cfg, raw.cols).dump(2) + "\n");
    // Informational listing of the globally selected features.
    const auto keep = shrink_select(raw, cfg.energy_fraction);
    std::ostringstream sel;
    sel << "column,path\n";
    for (std::size_t c : keep) sel << c << ',' << raw.paths[c] << '\n';
    write_file(fs::path(cfg.workdir) / "selected_features.csv", sel.str());

    log << "crossval: accuracy " << report.accuracy << " (" << report.correct << "/" << report.n
        << "), ablation " << ablation_to_string(cfg.ablation_level) << ", dim " << raw.cols;
    if (!report.folds.empty()) log << ", selected_dim[0] " << report.folds[0].selected_dim;
    log << (cfg.paper_parity ? ", paper-parity" : "") << '\n';
    return report;
}

inline CvReport run_pipeline(const RunConfig& cfg, std::ostream& log) {
    const StageSummary r = run_rasterize(cfg, log);
    if (r.failed) throw std::runtime_error("rasterize stage failed for " + std::to_string(r.failed) +
                                           " piece(s)");
    const StageSummary t = run_transform(cfg, log);
    if (t.failed) throw std::runtime_error("transform stage failed for " + std::to_string(t.failed) +
                                           " piece(s)");
    run_features(cfg, log);
    return run_crossval(cfg, log);
}

}  // namespace epr
