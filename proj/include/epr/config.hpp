// Run configuration: transform, pipeline and orchestration keys, parsed
// from a `key = value` config file and overridable from the command line.
#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/features.hpp"
#include "epr/scattering.hpp"

namespace epr {

struct RunConfig {
    TransformConfig transform;
    bool velocity_weighting = false;  // binary rasterization by default
    double energy_fraction = 0.5;
    double svm_c = 1e4;
    double svm_tol = 1e-4;
    std::size_t svm_max_iter = 10000;
    AblationLevel ablation_level = AblationLevel::Full;
    bool paper_parity = false;
    std::string manifest;
    std::string workdir = "work";
    std::size_t workers = 0;  // 0 = available parallelism
    std::string config_source;  // path of the file this config was read from

    void validate() const { transform.validate(); }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::runtime_error("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& v) {
    std::vector<int> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        const std::string s = trim(cur);
        if (!s.empty()) out.push_back(std::stoi(s));
    }
    return out;
}

}  // namespace detail

// Applies one key/value pair; unknown keys are an error so typos surface.
inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "frames") cfg.transform.frames = std::stoul(value);
        else if (key == "pitches") cfg.transform.pitches = std::stoul(value);
        else if (key == "pitch_pad") cfg.transform.pitch_pad = std::stoul(value);
        else if (key == "j1_scales") cfg.transform.j1_scales = std::stoi(value);
        else if (key == "j2_scales") cfg.transform.j2_scales = std::stoi(value);
        else if (key == "j2_coupling") {
            if (value == "coarser") cfg.transform.j2_coupling = Coupling::Coarser;
            else if (value == "all") cfg.transform.j2_coupling = Coupling::All;
            else throw std::runtime_error("config: j2_coupling must be coarser|all");
        } else if (key == "sigma") cfg.transform.sigma = std::stod(value);
        else if (key == "xi") cfg.transform.xi = std::stod(value);
        else if (key == "gamma2_set") cfg.transform.gamma2_set = detail::parse_int_list(value);
        else if (key == "velocity_weighting") cfg.velocity_weighting = detail::parse_bool(value, key);
        else if (key == "energy_fraction") cfg.energy_fraction = std::stod(value);
        else if (key == "svm_c") cfg.svm_c = std::stod(value);
        else if (key == "svm_tol") cfg.svm_tol = std::stod(value);
        else if (key == "svm_max_iter") cfg.svm_max_iter = std::stoul(value);
        else if (key == "ablation_level") cfg.ablation_level = ablation_from_string(value);
        else if (key == "paper_parity") cfg.paper_parity = detail::parse_bool(value, key);
        else if (key == "manifest") cfg.manifest = value;
        else if (key == "workdir") cfg.workdir = value;
        else if (key == "workers") cfg.workers = std::stoul(value);
        else throw std::runtime_error("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw std::runtime_error("config: invalid value '" + value + "' for key '" + key + "'");
    }
}

inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        apply_config_key(base, key, value);
    }
    return base;
}

inline std::string config_to_string(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "frames = " << c.transform.frames << '\n'
       << "pitches = " << c.transform.pitches << '\n'
       << "pitch_pad = " << c.transform.pitch_pad << '\n'
       << "j1_scales = " << c.transform.j1_scales << '\n'
       << "j2_scales = " << c.transform.j2_scales << '\n'
       << "j2_coupling = " << (c.transform.j2_coupling == Coupling::All ? "all" : "coarser") << '\n'
       << "sigma = " << c.transform.sigma << '\n'
       << "xi = " << c.transform.xi << '\n';
    os << "gamma2_set = ";
    for (std::size_t i = 0; i < c.transform.gamma2_set.size(); ++i)
        os << (i ? "," : "") << c.transform.gamma2_set[i];
    os << '\n';
    os << "velocity_weighting = " << (c.velocity_weighting ? "true" : "false") << '\n'
       << "energy_fraction = " << c.energy_fraction << '\n'
       << "svm_c = " << c.svm_c << '\n'
       << "svm_tol = " << c.svm_tol << '\n'
       << "svm_max_iter = " << c.svm_max_iter << '\n'
       << "ablation_level = " << ablation_to_string(c.ablation_level) << '\n'
       << "paper_parity = " << (c.paper_parity ? "true" : "false") << '\n'
       << "manifest = " << c.manifest << '\n'
       << "workdir = " << c.workdir << '\n'
       << "workers = " << c.workers << '\n';
    return os.str();
}

// Hash of the keys that affect transform outputs; used for cache skipping.
inline std::uint32_t transform_config_hash(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << c.transform.frames << '|' << c.transform.pitches << '|' << c.transform.pitch_pad << '|'
       << c.transform.j1_scales << '|' << c.transform.j2_scales << '|'
       << static_cast<int>(c.transform.j2_coupling) << '|' << c.transform.sigma << '|'
       << c.transform.xi << '|';
    for (int g : c.transform.gamma2_set) os << g << ';';
    os << '|' << c.velocity_weighting;
    return crc32(os.str());
}

}  // namespace epr
