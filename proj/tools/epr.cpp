// Command-line driver for the eigenprogression transform pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "epr/pipeline.hpp"
#include "epr/selftest.hpp"

namespace {

struct CommonOpts {
    std::string config_file;
    std::string manifest;
    std::string workdir;
    long workers = -1;
    std::string ablation;
    bool paper_parity = false;
    double energy_fraction = -1;
    double svm_c = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "key = value config file");
    cmd->add_option("--manifest", o.manifest, "dataset manifest CSV (path,label)");
    cmd->add_option("--workdir", o.workdir, "work directory for pipeline artifacts");
    cmd->add_option("--workers", o.workers, "worker count (default: available parallelism)");
    cmd->add_option("--ablation", o.ablation, "feature level: a1|a1b1|a1b1a2|a1b1a2b2|full");
    cmd->add_flag("--paper-parity", o.paper_parity,
                  "fit shrinkage and standardization once on the full dataset");
    cmd->add_option("--energy-fraction", o.energy_fraction, "shrinkage energy fraction (default 0.5)");
    cmd->add_option("--svm-c", o.svm_c, "SVM penalty C (default 1e4)");
}

epr::RunConfig resolve_config(const CommonOpts& o) {
    epr::RunConfig cfg;
    if (!o.config_file.empty()) {
        cfg = epr::parse_config(epr::read_file(o.config_file), cfg);
        cfg.config_source = o.config_file;
    }
    if (!o.manifest.empty()) cfg.manifest = o.manifest;
    if (!o.workdir.empty()) cfg.workdir = o.workdir;
    if (o.workers >= 0) cfg.workers = static_cast<std::size_t>(o.workers);
    if (!o.ablation.empty()) cfg.ablation_level = epr::ablation_from_string(o.ablation);
    if (o.paper_parity) cfg.paper_parity = true;
    if (o.energy_fraction >= 0) cfg.energy_fraction = o.energy_fraction;
    if (o.svm_c >= 0) cfg.svm_c = o.svm_c;
    cfg.validate();
    return cfg;
}

int print_selftest(bool quick, bool corrupt) {
    const auto rows = epr::run_selftest(quick, corrupt);
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    for (const auto& r : rows)
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name
                  << std::string(width - r.name.size() + 2, ' ') << r.detail << '\n';
    return epr::selftest_all_pass(rows) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eigenprogression transform toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* c_rast = app.add_subcommand("rasterize", "parse pieces and write EPRL piano rolls");
    add_common(c_rast, opts);
    auto* c_tran = app.add_subcommand("transform", "compute per-piece S1/S2 feature files");
    add_common(c_tran, opts);
    auto* c_feat = app.add_subcommand("features", "assemble the dataset feature matrix (EPFM)");
    add_common(c_feat, opts);
    auto* c_cv = app.add_subcommand("crossval", "leave-one-out cross-validation report");
    add_common(c_cv, opts);
    auto* c_pipe = app.add_subcommand("pipeline", "run rasterize, transform, features, crossval");
    add_common(c_pipe, opts);

    auto* c_self = app.add_subcommand("selftest", "run the embedded property suite");
    bool quick = false, corrupt = false;
    c_self->add_flag("--quick", quick, "run the sub-second subset only");
    c_self->add_flag("--corrupt-tonnetz", corrupt, "debug hook: perturb the Tonnetz Laplacian")
        ->group("");  // hidden

    auto* c_basis = app.add_subcommand("basis", "dump the eigenprogression basis as CSV");
    std::string basis_out;
    c_basis->add_option("--out", basis_out, "output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_self->parsed()) return print_selftest(quick, corrupt);
        if (c_basis->parsed()) {
            const auto basis = epr::eigenprogression_basis(epr::tonnetz_laplacian());
            const std::string csv = epr::basis_to_csv(basis);
            if (basis_out.empty())
                std::cout << csv;
            else
                epr::write_file(basis_out, csv);
            return 0;
        }
        const epr::RunConfig cfg = resolve_config(opts);
        if (c_rast->parsed()) return epr::run_rasterize(cfg, std::cout).failed == 0 ? 0 : 1;
        if (c_tran->parsed()) return epr::run_transform(cfg, std::cout).failed == 0 ? 0 : 1;
        if (c_feat->parsed()) {
            epr::run_features(cfg, std::cout);
            return 0;
        }
        if (c_cv->parsed()) {
            epr::run_crossval(cfg, std::cout);
            return 0;
        }
        if (c_pipe->parsed()) {
            epr::run_pipeline(cfg, std::cout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
