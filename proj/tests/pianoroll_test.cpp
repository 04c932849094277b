#include <gtest/gtest.h>

#include <random>

#include "epr/pianoroll.hpp"

using namespace epr;

TEST(Rasterize, SingleNoteFillsColumn) {
    const PianoRoll roll = rasterize({{60, 0, 480, 64}}, 8, 128);
    for (std::size_t t = 0; t < 8; ++t)
        for (std::size_t p = 0; p < 128; ++p)
            EXPECT_DOUBLE_EQ(roll.at(t, p), p == 60 ? 1.0 : 0.0);
}

TEST(Rasterize, TwoSimultaneousNotes) {
    const PianoRoll roll = rasterize({{60, 0, 480, 64}, {64, 0, 480, 64}}, 4, 128);
    for (std::size_t t = 0; t < 4; ++t) {
        EXPECT_DOUBLE_EQ(roll.at(t, 60), 1.0);
        EXPECT_DOUBLE_EQ(roll.at(t, 64), 1.0);
    }
}

TEST(Rasterize, ZeroDurationNoteOccupiesOneFrame) {
    // Piece span 800 ticks: tick 100 lands in frame 1 of 8.
    const PianoRoll roll = rasterize({{60, 100, 0, 64}, {70, 0, 800, 64}}, 8, 128);
    for (std::size_t t = 0; t < 8; ++t) EXPECT_DOUBLE_EQ(roll.at(t, 60), t == 1 ? 1.0 : 0.0);
}

TEST(Rasterize, EmptyInputGivesZeroRoll) {
    const PianoRoll roll = rasterize({}, 16, 32);
    for (double v : roll.data) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Rasterize, MonotoneUnderNoteAddition) {
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> pitch(0, 127), dur(0, 400), onset(0, 2000);
    std::vector<NoteEvent> notes;
    PianoRoll prev = rasterize(notes, 32, 128);
    for (int i = 0; i < 30; ++i) {
        notes.push_back({pitch(rng), onset(rng), dur(rng), 64});
        // Fix the span so earlier cells are comparable across additions.
        std::vector<NoteEvent> padded = notes;
        padded.push_back({0, 0, 2500, 1});
        const PianoRoll cur = rasterize(padded, 32, 128);
        if (i > 0)
            for (std::size_t k = 0; k < cur.data.size(); ++k)
                EXPECT_GE(cur.data[k] + 1e-15, prev.data[k]);
        prev = cur;
        for (double v : cur.data) EXPECT_TRUE(v == 0.0 || v == 1.0);
    }
}

TEST(Rasterize, VelocityModeScalesAndSaturates) {
    const PianoRoll roll = rasterize({{60, 0, 100, 127}, {60, 0, 100, 64}}, 4, 128, false);
    for (std::size_t t = 0; t < 4; ++t) EXPECT_DOUBLE_EQ(roll.at(t, 60), 1.0);  // max, not sum
    const PianoRoll soft = rasterize({{61, 0, 100, 64}}, 4, 128, false);
    EXPECT_NEAR(soft.at(0, 61), 64.0 / 127.0, 1e-15);
}

TEST(Symmetry, ShiftZeroIsIdentity) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uni(0, 1);
    PianoRoll x(16, 24);
    for (auto& v : x.data) v = uni(rng);
    EXPECT_EQ(time_shift(x, 0).data, x.data);
    EXPECT_EQ(pitch_transpose(x, 0).data, x.data);
}

TEST(Symmetry, RetrogradeIsInvolution) {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> uni(0, 1);
    PianoRoll x(16, 24);
    for (auto& v : x.data) v = uni(rng);
    EXPECT_EQ(retrograde(retrograde(x)).data, x.data);
    EXPECT_EQ(pitch_invert(pitch_invert(x)).data, x.data);
}

TEST(Symmetry, InvertImpulse) {
    PianoRoll x(4, 132);
    x.at(2, 5) = 1.0;
    const PianoRoll y = pitch_invert(x);
    EXPECT_DOUBLE_EQ(y.at(2, 127), 1.0);  // -5 mod 132
    EXPECT_DOUBLE_EQ(y.at(2, 5), 0.0);
}

TEST(Symmetry, ShiftComposition) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0, 1);
    PianoRoll x(16, 24);
    for (auto& v : x.data) v = uni(rng);
    const PianoRoll y = time_shift(time_shift(x, 5), 11);
    EXPECT_EQ(y.data, time_shift(x, 16 % 16).data);
}

TEST(RollFile, RoundTrip) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> uni(0, 1);
    PianoRoll x(8, 12);
    for (auto& v : x.data) v = uni(rng);
    const PianoRoll y = parse_roll(serialize_roll(x));
    EXPECT_EQ(x.frames, y.frames);
    EXPECT_EQ(x.pitches, y.pitches);
    EXPECT_EQ(x.data, y.data);
}

TEST(RollFile, Malformed) {
    EXPECT_THROW((void)parse_roll("XXXX"), std::runtime_error);
    PianoRoll x(4, 4);
    std::string bytes = serialize_roll(x);
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW((void)parse_roll(bytes), std::runtime_error);
}

TEST(NoteCsv, ParsesWithDefaultsAndErrors) {
    const auto notes = parse_note_csv("pitch,onset,duration\n60,0,480\n");
    ASSERT_EQ(notes.size(), 1u);
    EXPECT_EQ(notes[0], (NoteEvent{60, 0, 480, 64}));

    EXPECT_TRUE(parse_note_csv("pitch,onset,duration\n").empty());

    try {
        (void)parse_note_csv("pitch,onset,duration\n200,0,1\n");
        FAIL() << "expected range error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_THROW((void)parse_note_csv("pitch,onset,duration\nx,0,1\n"), std::runtime_error);
    EXPECT_THROW((void)parse_note_csv("bogus\n60,0,1\n"), std::runtime_error);
}

TEST(NoteCsv, VelocityColumnAndRoundTrip) {
    const auto notes = parse_note_csv("pitch,onset,duration,velocity\n60,0,480,99\n61,10,5,\n");
    ASSERT_EQ(notes.size(), 2u);
    EXPECT_EQ(notes[0].velocity, 99);
    EXPECT_EQ(notes[1].velocity, 64);
    EXPECT_EQ(parse_note_csv(notes_to_csv(notes)), notes);
}

TEST(Manifest, ParseAndClassValidation) {
    const auto m = parse_manifest("path,label\na.mid,haydn\nb.mid,mozart\n");
    ASSERT_EQ(m.entries.size(), 2u);
    EXPECT_EQ(m.entries[0].path, "a.mid");
    EXPECT_EQ(m.distinct_labels(), (std::vector<std::string>{"haydn", "mozart"}));
    EXPECT_NO_THROW(validate_two_classes(m));

    const auto single = parse_manifest("path,label\na.mid,haydn\nb.mid,haydn\n");
    try {
        validate_two_classes(single);
        FAIL() << "expected class-count error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("exactly two classes"), std::string::npos);
    }

    const auto empty = parse_manifest("path,label\n");
    EXPECT_TRUE(empty.entries.empty());
    EXPECT_THROW(validate_two_classes(empty), std::runtime_error);
}
