/* Copyright 2026 The PlayNPort Simulator Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#include "pnp/ir_nec.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace pnp;
using namespace pnp::ir;

namespace {

// Slot lengths rebuilt from a byte sequence, MSB first, independent of the encoder.
std::vector<Micros> expected_slots(std::initializer_list<std::uint8_t> bytes)
{
    std::vector<Micros> out;
    for (std::uint8_t b : bytes) {
        for (int bit = 7; bit >= 0; --bit) {
            out.push_back((b >> bit) & 1 ? 562 + 1687 : 562 + 562);
        }
    }
    return out;
}

std::vector<Segment> segments_of(const PulseTrain& t)
{
    return {t.segments().begin(), t.segments().end()};
}

PulseTrain jitter(const PulseTrain& t, double frac, std::mt19937& rng)
{
    std::uniform_real_distribution<double> d(-frac, frac);
    PulseTrain out;
    for (const auto& s : t.segments()) {
        out.push(s.level, static_cast<Micros>(static_cast<double>(s.duration) * (1.0 + d(rng)) + 0.5));
    }
    return out;
}

} // namespace

TEST(PulseTrain, RejectsNonAlternatingAndZero)
{
    PulseTrain t;
    t.push(Level::Mark, 10);
    EXPECT_THROW(t.push(Level::Mark, 10), PulseTrainError);
    EXPECT_THROW(t.push(Level::Space, 0), PulseTrainError);
}

TEST(Encode, FrameStartsWithAgcAndHeader)
{
    const PulseTrain t = encode_frame(0x10, 0x00);
    ASSERT_GE(t.size(), 2u);
    EXPECT_EQ(t[0], (Segment{Level::Mark, 9000}));
    EXPECT_EQ(t[1], (Segment{Level::Space, 4500}));
    EXPECT_EQ(t.size(), 2u + 64u + 1u);
    EXPECT_EQ(t[t.size() - 1], (Segment{Level::Mark, 562}));
}

TEST(Encode, FrameLengthConstant)
{
    // 16 ones and 16 zeros every time: 13500 + 16*2249 + 16*1124 + 562.
    const Micros expected = 13500 + 16 * 2249 + 16 * 1124 + 562;
    for (int a = 0; a < 256; a += 15) {
        for (int c = 0; c < 256; ++c) {
            const Micros d = encode_frame(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(c)).total_duration();
            ASSERT_EQ(d, expected);
        }
    }
    EXPECT_LE(expected, 68062u + 32u);
    EXPECT_GE(expected, 68062u - 32u);
}

TEST(Encode, RepeatIsThreeSegments)
{
    const PulseTrain r = encode_repeat();
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0], (Segment{Level::Mark, 9000}));
    EXPECT_EQ(r[1], (Segment{Level::Space, 2250}));
    EXPECT_EQ(r[2], (Segment{Level::Mark, 562}));
    EXPECT_EQ(decode(r), IrEvent{Repeat{}});
}

TEST(Encode, HoldRepeatCount)
{
    EXPECT_EQ(repeat_count(0), 0u);
    EXPECT_EQ(repeat_count(109'999), 0u);
    EXPECT_EQ(repeat_count(110'000), 1u);
    EXPECT_EQ(repeat_count(300'000), 2u);
    EXPECT_EQ(repeat_count(500'000), 4u);

    const PulseTrain t = encode_hold(0x10, 0x19, 500'000);
    // Mark starts of each repeat AGC fall on multiples of 110 ms.
    std::vector<Micros> agc_starts;
    Micros at = 0;
    for (const auto& s : t.segments()) {
        if (s.level == Level::Mark && s.duration == 9000) {
            agc_starts.push_back(at);
        }
        at += s.duration;
    }
    EXPECT_EQ(agc_starts, (std::vector<Micros>{0, 110'000, 220'000, 330'000, 440'000}));
    EXPECT_EQ(encode_hold(0x10, 0x19, 0), encode_frame(0x10, 0x19));
}

TEST(Capture, SlotsMatchMsbFirstExpansion)
{
    const SlotCapture got = capture_bits(encode_frame(0x10, 0x00));
    const auto want = expected_slots({0x10, 0xEF, 0x00, 0xFF});
    ASSERT_EQ(want.size(), 32u);
    for (std::size_t i = 0; i < 32; ++i) {
        EXPECT_EQ(got[i], want[i]) << i;
    }
    for (int i = 0; i < 3; ++i) {
        EXPECT_TRUE(within_tolerance(got[i], 1125, 0.2));
    }
}

TEST(Capture, Errors)
{
    try {
        capture_bits(encode_repeat());
        FAIL();
    } catch (const CaptureError& e) {
        EXPECT_EQ(e.code(), CaptureErrc::NoStartCondition);
    }
    try {
        capture_bits(PulseTrain{});
        FAIL();
    } catch (const CaptureError& e) {
        EXPECT_EQ(e.code(), CaptureErrc::TruncatedTrain);
    }
}

TEST(Decode, AllCommandsRoundTrip)
{
    for (int c = 0; c < 256; ++c) {
        const auto cmd = static_cast<std::uint8_t>(c);
        const IrEvent ev = decode(encode_frame(0x10, cmd));
        ASSERT_EQ(ev, IrEvent(IrFrame{0x10, 0xEF, cmd, static_cast<std::uint8_t>(~cmd)})) << c;
    }
}

TEST(Decode, FirstSixteenBitsAre10EF)
{
    const SlotCapture slots = capture_bits(encode_frame(0x10, 0x45));
    std::uint32_t word = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        word = (word << 1) | (slots[i] > 1687 ? 1u : 0u);
    }
    EXPECT_EQ(word, 0x10EFu);
}

TEST(Decode, WrongAddressAndInverse)
{
    EXPECT_EQ(decode(encode_frame(0x20, 0x45)), IrEvent(Garbage{"wrong-address"}));
    // Flip the last command-inverse bit: swap the final slot's space length.
    std::vector<Segment> segs = segments_of(encode_frame(0x10, 0x45));
    Segment& last_space = segs[segs.size() - 2];
    last_space.duration = last_space.duration == 1687 ? 562 : 1687;
    EXPECT_EQ(decode(PulseTrain(segs)), IrEvent(Garbage{"inverse-mismatch"}));
}

TEST(Decode, OutOfToleranceSlot)
{
    std::vector<Segment> segs = segments_of(encode_frame(0x10, 0x45));
    segs[3].duration = 1687 + 700; // slot 0 → ~2950 us, outside 2250±20%
    const IrEvent ev = decode(PulseTrain(segs));
    ASSERT_TRUE(std::holds_alternative<Garbage>(ev));
    EXPECT_EQ(std::get<Garbage>(ev).reason, "bad-slot");
}

TEST(Decode, JitterWithinFifteenPercent)
{
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937 rng(static_cast<unsigned>(seed));
        for (int c = 0; c < 256; c += 7) {
            const auto cmd = static_cast<std::uint8_t>(c);
            const PulseTrain clean = encode_frame(0x10, cmd);
            ASSERT_EQ(decode(jitter(clean, 0.15, rng)), decode(clean));
        }
    }
}

TEST(Decode, ToleranceMonotone)
{
    std::mt19937 rng(99);
    for (int i = 0; i < 300; ++i) {
        const PulseTrain t = jitter(encode_frame(0x10, static_cast<std::uint8_t>(i)), 0.3, rng);
        NecTimings tight;
        tight.tolerance = 0.2;
        NecTimings wide;
        wide.tolerance = 0.3;
        if (std::holds_alternative<IrFrame>(decode(t, tight))) {
            EXPECT_EQ(decode(t, wide), decode(t, tight));
        }
    }
}

TEST(Decode, ClassWindowsDoNotOverlap)
{
    NecTimings t;
    for (Micros slot = 500; slot < 3500; ++slot) {
        const auto bit = classify_slot(slot, t);
        const bool in_one = slot >= 1800 && slot <= 2700;
        const bool in_zero = slot >= 900 && slot <= 1350;
        if (bit) {
            EXPECT_EQ(*bit, in_one) << slot;
            EXPECT_TRUE(in_one || in_zero) << slot;
        } else {
            EXPECT_FALSE(in_one || in_zero) << slot;
        }
    }
}

TEST(Stream, SplitsOnIdleGap)
{
    const auto events = decode_stream(encode_hold(0x10, 0x40, 300'000));
    ASSERT_EQ(events.size(), 3u);
    EXPECT_TRUE(std::holds_alternative<IrFrame>(events[0]));
    EXPECT_EQ(events[1], IrEvent(Repeat{}));
    EXPECT_EQ(events[2], IrEvent(Repeat{}));
}

TEST(CaptureFile, RoundTrip)
{
    const PulseTrain t = encode_hold(0x10, 0x46, 250'000);
    std::stringstream s;
    write_capture(s, t);
    EXPECT_EQ(read_capture(s), t);
}

TEST(CaptureFile, CommentsAndErrors)
{
    std::istringstream ok("# header\nmark,9000\n\nspace, 2250 # repeat gap\nMARK,562\n");
    EXPECT_EQ(decode(read_capture(ok)), IrEvent(Repeat{}));
    std::istringstream bad("mark,9000\nflat,10\n");
    EXPECT_THROW(read_capture(bad), PulseTrainError);
    std::istringstream dup("mark,9000\nmark,10\n");
    EXPECT_THROW(read_capture(dup), PulseTrainError);
}

TEST(Buttons, NineButtonsResolve)
{
    const ButtonMap m = ButtonMap::defaults();
    EXPECT_EQ(m.size(), 9u);
    for (RemoteButton b : kAllButtons) {
        const auto cmd = m.command_for(b);
        ASSERT_TRUE(cmd);
        EXPECT_EQ(match_button(IrFrame{0x10, 0xEF, *cmd, static_cast<std::uint8_t>(~*cmd)}, m), b);
    }
}

TEST(Buttons, TableLookups)
{
    ButtonMap m;
    EXPECT_EQ(match_button(IrFrame{0x10, 0xEF, 0x45, 0xBA}, m), std::nullopt);
    m.set(0x45, RemoteButton::A);
    EXPECT_EQ(match_button(IrFrame{0x10, 0xEF, 0x45, 0xBA}, m), RemoteButton::A);
    EXPECT_EQ(parse_button("center"), RemoteButton::Center);
    EXPECT_EQ(parse_button("Up"), RemoteButton::Up);
    EXPECT_EQ(parse_button("menu"), std::nullopt);
}

TEST(Buttons, ShippedMappingMatchesDefaults)
{
    std::ifstream f(std::string(PNP_CONFIG_DIR) + "/remote.map");
    ASSERT_TRUE(f);
    EXPECT_EQ(ButtonMap::parse(f).table(), ButtonMap::defaults().table());
}

TEST(Buttons, MappingErrors)
{
    std::istringstream dup("0x45=A\n0x45=B\n");
    EXPECT_THROW(ButtonMap::parse(dup), MappingError);
    std::istringstream unknown("0x45=MENU\n");
    EXPECT_THROW(ButtonMap::parse(unknown), MappingError);
    std::istringstream wide("0x145=A\n");
    EXPECT_THROW(ButtonMap::parse(wide), MappingError);
}

TEST(Receiver, LatchesAfterIdleGap)
{
    IrReceiver rx(20'000);
    const PulseTrain t = encode_frame(0x10, 0x46);
    Micros at = 1000;
    for (const auto& s : t.segments()) {
        rx.on_edge(at, s.level);
        at += s.duration;
    }
    rx.on_edge(at, Level::Space);
    rx.on_idle_check(at + 19'999);
    EXPECT_FALSE(rx.data_received());
    rx.on_idle_check(at + 20'000);
    ASSERT_TRUE(rx.data_received());
    EXPECT_EQ(rx.take(), t);
    EXPECT_FALSE(rx.data_received());
}
