// Note events, piano-roll rasterization, cyclic symmetry operators, and the
// EPRL binary roll format. Also the note CSV and dataset manifest parsers.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace epr {

struct NoteEvent {
    int pitch = 0;     // MIDI pitch in [0, 127]
    long onset = 0;    // absolute ticks, >= 0
    long duration = 0; // ticks, >= 0
    int velocity = 64; // [0, 127]

    bool operator==(const NoteEvent&) const = default;
};

inline void validate_note(const NoteEvent& n) {
    if (n.pitch < 0 || n.pitch > 127) throw std::invalid_argument("note pitch out of range [0,127]");
    if (n.onset < 0) throw std::invalid_argument("note onset must be >= 0");
    if (n.duration < 0) throw std::invalid_argument("note duration must be >= 0");
    if (n.velocity < 0 || n.velocity > 127)
        throw std::invalid_argument("note velocity out of range [0,127]");
}

// Non-negative T x P activation matrix, row-major in t (pitch fastest).
struct PianoRoll {
    std::size_t frames = 0;
    std::size_t pitches = 0;
    std::vector<double> data;

    PianoRoll() = default;
    PianoRoll(std::size_t t, std::size_t p) : frames(t), pitches(p), data(t * p, 0.0) {}

    double& at(std::size_t t, std::size_t p) { return data[t * pitches + p]; }
    double at(std::size_t t, std::size_t p) const { return data[t * pitches + p]; }
};

// Maps the piece's tick span linearly onto [0, T). A note whose rounded
// extent would be empty occupies exactly one frame, so sub-frame onsets are
// kept. Overlaps saturate via max.
inline PianoRoll rasterize(const std::vector<NoteEvent>& notes, std::size_t frames,
                           std::size_t pitches, bool binary = true) {
    if (frames < 1 || pitches < 1) throw std::invalid_argument("rasterize: T and P must be >= 1");
    PianoRoll roll(frames, pitches);
    if (notes.empty()) return roll;
    long span = 0;
    for (const auto& n : notes) {
        validate_note(n);
        span = std::max(span, n.onset + n.duration);
    }
    if (span <= 0) span = 1;
    const double scale = static_cast<double>(frames) / static_cast<double>(span);
    for (const auto& n : notes) {
        if (n.pitch >= static_cast<int>(pitches)) continue;
        auto t0 = static_cast<long>(std::floor(static_cast<double>(n.onset) * scale));
        auto t1 = static_cast<long>(std::floor(static_cast<double>(n.onset + n.duration) * scale));
        t0 = std::clamp(t0, 0L, static_cast<long>(frames) - 1);
        if (t1 <= t0) t1 = t0 + 1;
        t1 = std::min(t1, static_cast<long>(frames));
        const double value = binary ? 1.0 : static_cast<double>(n.velocity) / 127.0;
        for (long t = t0; t < t1; ++t) {
            double& cell = roll.at(static_cast<std::size_t>(t), static_cast<std::size_t>(n.pitch));
            cell = std::max(cell, value);
        }
    }
    return roll;
}

// ---- cyclic symmetry operators ---------------------------------------------

inline PianoRoll time_shift(const PianoRoll& x, long dt) {
    PianoRoll y(x.frames, x.pitches);
    const long T = static_cast<long>(x.frames);
    for (long t = 0; t < T; ++t) {
        const long src = ((t - dt) % T + T) % T;
        for (std::size_t p = 0; p < x.pitches; ++p)
            y.at(static_cast<std::size_t>(t), p) = x.at(static_cast<std::size_t>(src), p);
    }
    return y;
}

inline PianoRoll pitch_transpose(const PianoRoll& x, long dp) {
    PianoRoll y(x.frames, x.pitches);
    const long P = static_cast<long>(x.pitches);
    for (std::size_t t = 0; t < x.frames; ++t)
        for (long p = 0; p < P; ++p) {
            const long src = ((p - dp) % P + P) % P;
            y.at(t, static_cast<std::size_t>(p)) = x.at(t, static_cast<std::size_t>(src));
        }
    return y;
}

inline PianoRoll retrograde(const PianoRoll& x) {
    PianoRoll y(x.frames, x.pitches);
    const long T = static_cast<long>(x.frames);
    for (long t = 0; t < T; ++t) {
        const long src = ((-t) % T + T) % T;
        for (std::size_t p = 0; p < x.pitches; ++p)
            y.at(static_cast<std::size_t>(t), p) = x.at(static_cast<std::size_t>(src), p);
    }
    return y;
}

inline PianoRoll pitch_invert(const PianoRoll& x) {
    PianoRoll y(x.frames, x.pitches);
    const long P = static_cast<long>(x.pitches);
    for (std::size_t t = 0; t < x.frames; ++t)
        for (long p = 0; p < P; ++p) {
            const long src = ((-p) % P + P) % P;
            y.at(t, static_cast<std::size_t>(p)) = x.at(t, static_cast<std::size_t>(src));
        }
    return y;
}

// ---- EPRL binary roll files -------------------------------------------------
// magic "EPRL", version u32, T u32, P u32, then T*P little-endian f64,
// row-major in t.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw std::runtime_error("unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

inline void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

inline double get_f64(const std::string& in, std::size_t& pos) {
    if (pos + 8 > in.size()) throw std::runtime_error("unexpected end of file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += 8;
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace detail

inline constexpr std::uint32_t kRollFormatVersion = 1;

inline std::string serialize_roll(const PianoRoll& roll) {
    std::string out;
    out.reserve(16 + roll.data.size() * 8);
    out += "EPRL";
    detail::put_u32(out, kRollFormatVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(roll.frames));
    detail::put_u32(out, static_cast<std::uint32_t>(roll.pitches));
    for (double d : roll.data) detail::put_f64(out, d);
    return out;
}

inline PianoRoll parse_roll(const std::string& bytes) {
    if (bytes.size() < 16 || bytes.compare(0, 4, "EPRL") != 0)
        throw std::runtime_error("not an EPRL piano-roll file");
    std::size_t pos = 4;
    const std::uint32_t version = detail::get_u32(bytes, pos);
    if (version != kRollFormatVersion)
        throw std::runtime_error("unsupported EPRL version " + std::to_string(version));
    const std::uint32_t t = detail::get_u32(bytes, pos);
    const std::uint32_t p = detail::get_u32(bytes, pos);
    PianoRoll roll(t, p);
    if (bytes.size() != 16 + static_cast<std::size_t>(t) * p * 8)
        throw std::runtime_error("EPRL file size does not match header");
    for (auto& d : roll.data) d = detail::get_f64(bytes, pos);
    return roll;
}

// ---- note CSV ----------------------------------------------------------------
// header `pitch,onset,duration[,velocity]`, one note per line.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline long parse_long_field(const std::string& s, std::size_t line_no, const char* what) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": " + what +
                                 " is not an integer: '" + s + "'");
    }
    while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
    if (used != s.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ": " + what +
                                 " is not an integer: '" + s + "'");
    return v;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::vector<NoteEvent> parse_note_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    bool has_velocity = false;
    std::vector<NoteEvent> notes;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (!header_seen) {
            if (fields.size() < 3 || detail::trim(fields[0]) != "pitch" ||
                detail::trim(fields[1]) != "onset" || detail::trim(fields[2]) != "duration")
                throw std::runtime_error("line 1: expected header pitch,onset,duration[,velocity]");
            has_velocity = fields.size() >= 4 && detail::trim(fields[3]) == "velocity";
            header_seen = true;
            continue;
        }
        if (fields.size() < 3)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected 3 or 4 fields");
        NoteEvent n;
        n.pitch = static_cast<int>(detail::parse_long_field(fields[0], line_no, "pitch"));
        n.onset = detail::parse_long_field(fields[1], line_no, "onset");
        n.duration = detail::parse_long_field(fields[2], line_no, "duration");
        n.velocity = (has_velocity && fields.size() >= 4 && !detail::trim(fields[3]).empty())
                         ? static_cast<int>(detail::parse_long_field(fields[3], line_no, "velocity"))
                         : 64;
        try {
            validate_note(n);
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        notes.push_back(n);
    }
    if (!header_seen) throw std::runtime_error("line 1: expected header pitch,onset,duration[,velocity]");
    return notes;
}

inline std::string notes_to_csv(const std::vector<NoteEvent>& notes) {
    std::ostringstream os;
    os << "pitch,onset,duration,velocity\n";
    for (const auto& n : notes)
        os << n.pitch << ',' << n.onset << ',' << n.duration << ',' << n.velocity << '\n';
    return os.str();
}

// ---- dataset manifest ---------------------------------------------------------

struct DatasetManifest {
    struct Entry {
        std::string path;
        std::string label;
    };
    std::vector<Entry> entries;

    std::vector<std::string> distinct_labels() const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (std::find(out.begin(), out.end(), e.label) == out.end()) out.push_back(e.label);
        std::sort(out.begin(), out.end());
        return out;
    }
};

inline DatasetManifest parse_manifest(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    DatasetManifest m;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (!header_seen) {
            if (fields.size() < 2 || detail::trim(fields[0]) != "path" ||
                detail::trim(fields[1]) != "label")
                throw std::runtime_error("line 1: expected header path,label");
            header_seen = true;
            continue;
        }
        if (fields.size() < 2)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected path,label");
        m.entries.push_back({detail::trim(fields[0]), detail::trim(fields[1])});
    }
    if (!header_seen) throw std::runtime_error("line 1: expected header path,label");
    return m;
}

// Two distinct classes are required for training.
inline void validate_two_classes(const DatasetManifest& m) {
    const auto labels = m.distinct_labels();
    if (labels.size() != 2)
        throw std::runtime_error("exactly two classes required, manifest has " +
                                 std::to_string(labels.size()));
}

}  // namespace epr
