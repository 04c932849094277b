// Standard MIDI File reader (formats 0 and 1) producing note events with
// absolute tick onsets, and a minimal single-track writer.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/pianoroll.hpp"

namespace epr {

class MidiParseError : public std::runtime_error {
public:
    MidiParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

namespace midi_detail {

struct Cursor {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos = 0;

    std::uint8_t u8(const char* what) {
        if (pos >= size) throw MidiParseError(std::string("truncated ") + what, pos);
        return data[pos++];
    }
    std::uint16_t u16(const char* what) {
        const std::uint16_t hi = u8(what), lo = u8(what);
        return static_cast<std::uint16_t>((hi << 8) | lo);
    }
    std::uint32_t u32(const char* what) {
        const std::uint32_t a = u8(what), b = u8(what), c = u8(what), d = u8(what);
        return (a << 24) | (b << 16) | (c << 8) | d;
    }
    // Variable-length quantity, at most 4 bytes.
    std::uint32_t vlq() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint8_t b = u8("variable-length quantity");
            v = (v << 7) | (b & 0x7F);
            if ((b & 0x80) == 0) return v;
        }
        throw MidiParseError("variable-length quantity longer than 4 bytes", pos);
    }
    void skip(std::size_t n, const char* what) {
        if (pos + n > size) throw MidiParseError(std::string("truncated ") + what, pos);
        pos += n;
    }
};

}  // namespace midi_detail

// Parses one track chunk body, appending completed notes. Note-on with
// velocity zero closes like a note-off; note-offs match the earliest open
// note-on of the same channel and pitch; unmatched note-ons are closed at
// the end of the track.
namespace midi_detail {

inline void parse_track(Cursor& c, std::size_t track_end, std::vector<NoteEvent>& notes) {
    struct Open {
        long onset;
        int velocity;
    };
    std::map<std::pair<int, int>, std::vector<Open>> open;  // (channel, pitch) -> FIFO
    long tick = 0;
    int running_status = -1;

    auto close_note = [&](int channel, int pitch, long at_tick) {
        auto it = open.find({channel, pitch});
        if (it == open.end() || it->second.empty()) return;  // unmatched note-off, ignored
        const Open o = it->second.front();
        it->second.erase(it->second.begin());
        NoteEvent n;
        n.pitch = pitch;
        n.onset = o.onset;
        n.duration = std::max(0L, at_tick - o.onset);
        n.velocity = o.velocity;
        notes.push_back(n);
    };

    while (c.pos < track_end) {
        tick += c.vlq();
        std::uint8_t status = c.u8("event status");
        if (status < 0x80) {
            if (running_status < 0)
                throw MidiParseError("data byte without running status", c.pos - 1);
            --c.pos;  // data byte belongs to the running status
            status = static_cast<std::uint8_t>(running_status);
        }
        if (status == 0xFF) {
            running_status = -1;
            const std::uint8_t type = c.u8("meta event type");
            const std::uint32_t len = c.vlq();
            c.skip(len, "meta event");
            if (type == 0x2F) {  // end of track
                c.pos = track_end;
                break;
            }
            continue;
        }
        if (status == 0xF0 || status == 0xF7) {
            running_status = -1;
            const std::uint32_t len = c.vlq();
            c.skip(len, "sysex event");
            continue;
        }
        if (status >= 0xF1) throw MidiParseError("unexpected system status byte", c.pos - 1);

        running_status = status;
        const int kind = status >> 4;
        const int channel = status & 0x0F;
        switch (kind) {
            case 0x8: {  // note off
                const int pitch = c.u8("note-off pitch") & 0x7F;
                c.u8("note-off velocity");
                close_note(channel, pitch, tick);
                break;
            }
            case 0x9: {  // note on (velocity 0 closes)
                const int pitch = c.u8("note-on pitch") & 0x7F;
                const int vel = c.u8("note-on velocity") & 0x7F;
                if (vel == 0)
                    close_note(channel, pitch, tick);
                else
                    open[{channel, pitch}].push_back({tick, vel});
                break;
            }
            case 0xA:
            case 0xB:
            case 0xE:
                c.skip(2, "channel event");
                break;
            case 0xC:
            case 0xD:
                c.skip(1, "channel event");
                break;
            default:
                throw MidiParseError("unhandled status byte", c.pos - 1);
        }
    }
    for (auto& [key, stack] : open)
        for (const Open& o : stack) {
            NoteEvent n;
            n.pitch = key.second;
            n.onset = o.onset;
            n.duration = std::max(0L, tick - o.onset);
            n.velocity = o.velocity;
            notes.push_back(n);
        }
}

}  // namespace midi_detail

// Parses an SMF format 0 or 1 file; onsets are absolute ticks merged across
// tracks, sorted by (onset, pitch, duration).
inline std::vector<NoteEvent> parse_midi(const std::string& bytes) {
    midi_detail::Cursor c{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
    if (bytes.size() < 4 || bytes.compare(0, 4, "MThd") != 0)
        throw MidiParseError("not a Standard MIDI File (missing MThd)", 0);
    c.pos = 4;
    const std::uint32_t header_len = c.u32("header length");
    if (header_len < 6) throw MidiParseError("malformed header chunk", c.pos);
    const std::uint16_t format = c.u16("format");
    const std::uint16_t ntrks = c.u16("track count");
    c.u16("division");
    if (format == 2) throw MidiParseError("unsupported format 2", 8);
    if (format > 2) throw MidiParseError("unknown SMF format " + std::to_string(format), 8);
    c.skip(header_len - 6, "header chunk");

    std::vector<NoteEvent> notes;
    for (std::uint16_t trk = 0; trk < ntrks; ++trk) {
        if (c.pos + 8 > c.size) throw MidiParseError("truncated track chunk header", c.pos);
        if (bytes.compare(c.pos, 4, "MTrk") != 0) {
            // Unknown chunk types are skipped per the SMF specification.
            c.pos += 4;
            const std::uint32_t len = c.u32("chunk length");
            c.skip(len, "chunk");
            --trk;
            continue;
        }
        c.pos += 4;
        const std::uint32_t len = c.u32("track length");
        if (c.pos + len > c.size) throw MidiParseError("truncated track chunk", c.pos);
        const std::size_t track_end = c.pos + len;
        midi_detail::parse_track(c, track_end, notes);
        c.pos = track_end;
    }
    std::stable_sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
        if (a.onset != b.onset) return a.onset < b.onset;
        if (a.pitch != b.pitch) return a.pitch < b.pitch;
        return a.duration < b.duration;
    });
    return notes;
}

// Minimal SMF format 0 writer (single track, explicit statuses, channel 0).
inline std::string write_midi(const std::vector<NoteEvent>& notes, int division = 480) {
    struct Ev {
        long tick;
        int order;  // offs (0) before ons (1), except a zero-length note's own off (2)
        std::uint8_t status;
        std::uint8_t pitch;
        std::uint8_t vel;
    };
    std::vector<Ev> evs;
    for (const auto& n : notes) {
        validate_note(n);
        const std::uint8_t vel = static_cast<std::uint8_t>(n.velocity == 0 ? 64 : n.velocity);
        evs.push_back({n.onset, 1, 0x90, static_cast<std::uint8_t>(n.pitch), vel});
        evs.push_back({n.onset + n.duration, n.duration == 0 ? 2 : 0, 0x80,
                       static_cast<std::uint8_t>(n.pitch), 0});
    }
    std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        return a.order < b.order;
    });

    std::string track;
    auto put_vlq = [&](long v) {
        unsigned char buf[4];
        int n = 0;
        do {
            buf[n++] = static_cast<unsigned char>(v & 0x7F);
            v >>= 7;
        } while (v > 0 && n < 4);
        for (int i = n - 1; i >= 0; --i)
            track.push_back(static_cast<char>(buf[i] | (i > 0 ? 0x80 : 0)));
    };
    long prev = 0;
    for (const auto& e : evs) {
        put_vlq(e.tick - prev);
        prev = e.tick;
        track.push_back(static_cast<char>(e.status));
        track.push_back(static_cast<char>(e.pitch));
        track.push_back(static_cast<char>(e.vel));
    }
    put_vlq(0);
    track.push_back(static_cast<char>(0xFF));
    track.push_back(0x2F);
    track.push_back(0x00);

    std::string out = "MThd";
    auto put_u32be = [&](std::uint32_t v) {
        for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    auto put_u16be = [&](std::uint16_t v) {
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xFF));
    };
    put_u32be(6);
    put_u16be(0);  // format 0
    put_u16be(1);  // one track
    put_u16be(static_cast<std::uint16_t>(division));
    out += "MTrk";
    put_u32be(static_cast<std::uint32_t>(track.size()));
    out += track;
    return out;
}

}  // namespace epr
