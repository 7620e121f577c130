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
#include "pnp/spi.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <random>

using namespace pnp;
using namespace pnp::spi;

namespace {

class ScriptedSlave : public SpiSlave {
public:
    explicit ScriptedSlave(SpiFormat f = {}) : m_format(f) {}

    SpiFormat format() const override { return m_format; }
    std::uint8_t exchange(std::uint8_t mosi, const TransferContext&) override
    {
        received.push_back(mosi);
        if (queued.empty()) {
            return 0xFF;
        }
        const std::uint8_t b = queued.front();
        queued.pop_front();
        return b;
    }
    void on_select(Micros) override { ++selects; }
    void on_deselect(Micros) override { ++deselects; }
    void on_idle_clocks(std::size_t cycles) override { idle += cycles; }

    SpiFormat m_format;
    std::deque<std::uint8_t> queued;
    std::vector<std::uint8_t> received;
    int selects = 0;
    int deselects = 0;
    std::size_t idle = 0;
};

// Reference skew built bit by bit: phase mismatch moves every bit one
// position (towards the MSB when the master samples late), polarity flips
// the bit the master shifts first, bit-order mismatch mirrors positions.
std::uint8_t reference_skew(std::uint8_t b, SpiFormat m, SpiFormat s)
{
    auto bit = [](std::uint8_t v, int k) { return (v >> k) & 1; };
    std::uint8_t v = b;
    if (m.mode.ckph != s.mode.ckph) {
        std::uint8_t r = 0;
        for (int k = 0; k < 8; ++k) {
            const int from = m.mode.ckph > s.mode.ckph ? (k + 7) % 8 : (k + 1) % 8;
            r = static_cast<std::uint8_t>(r | bit(v, from) << k);
        }
        v = r;
    }
    if (m.mode.ckpl != s.mode.ckpl) {
        v = static_cast<std::uint8_t>(v ^ (1 << (m.msb_first ? 7 : 0)));
    }
    if (m.msb_first != s.msb_first) {
        std::uint8_t r = 0;
        for (int k = 0; k < 8; ++k) {
            r = static_cast<std::uint8_t>(r | bit(v, 7 - k) << k);
        }
        v = r;
    }
    return v;
}

} // namespace

TEST(Bitrate, EquationExamples)
{
    SpiConfig c;
    c.source_clock_hz = 48'000'000;
    c.divisor = 24;
    EXPECT_EQ(effective_bitrate(c).hz, 2'000'000u);
    c.divisor = 400;
    EXPECT_EQ(effective_bitrate(c).hz, 120'000u);
    c.divisor = 1;
    EXPECT_EQ(effective_bitrate(c).hz, 48'000'000u);
    c.divisor = 7;
    EXPECT_EQ(effective_bitrate(c).remainder, 48'000'000u % 7);
}

TEST(Bitrate, DivisorFor)
{
    EXPECT_EQ(divisor_for(48'000'000, 400'000), 120u);
    EXPECT_EQ(divisor_for(48'000'000, 12'000'000), 4u);
    EXPECT_EQ(divisor_for(48'000'000, 2'000'000), 24u);
    EXPECT_EQ(divisor_for(48'000'000, 120'000), 400u);
    EXPECT_EQ(divisor_for(48'000'000, 7'000'000), 7u); // never above target
}

TEST(Config, Validation)
{
    SpiConfig c;
    c.divisor = 0;
    EXPECT_THROW(c.validate(), SpiError);
    c.divisor = 1;
    c.source_clock_hz = 0;
    EXPECT_THROW(c.validate(), SpiError);
    EXPECT_EQ(SpiMode::from_number(2), (SpiMode{1, 0}));
    EXPECT_EQ(SpiMode::from_number(1), (SpiMode{0, 1}));
    EXPECT_THROW(SpiMode::from_number(4), SpiError);
}

TEST(Skew, MatchesReferenceForAllFormats)
{
    for (int m = 0; m < 8; ++m) {
        for (int s = 0; s < 8; ++s) {
            const SpiFormat fm{SpiMode::from_number(m & 3), (m & 4) == 0};
            const SpiFormat fs{SpiMode::from_number(s & 3), (s & 4) == 0};
            for (int b = 0; b < 256; ++b) {
                const auto byte = static_cast<std::uint8_t>(b);
                ASSERT_EQ(skew_byte(byte, fm, fs), reference_skew(byte, fm, fs)) << m << " " << s << " " << b;
            }
        }
    }
}

TEST(Skew, IdentityIffModesMatch)
{
    for (int m = 0; m < 4; ++m) {
        for (int s = 0; s < 4; ++s) {
            const SpiFormat fm{SpiMode::from_number(m), true};
            const SpiFormat fs{SpiMode::from_number(s), true};
            EXPECT_EQ(skew_byte(0x5A, fm, fs) == 0x5A, m == s) << m << "/" << s;
        }
    }
}

TEST(Bus, LoopExchange)
{
    Scheduler sched;
    SpiConfig cfg;
    cfg.mode = {0, 0};
    SpiBus bus(sched, cfg);
    ScriptedSlave slave(SpiFormat{{0, 0}, true});
    bus.add_line(ChipSelect{3}, slave);
    slave.queued.push_back(0xA3);
    bus.select(ChipSelect{3});
    EXPECT_EQ(bus.transfer(ChipSelect{3}, 0x5A), 0xA3);
    EXPECT_EQ(slave.received, (std::vector<std::uint8_t>{0x5A}));
    EXPECT_EQ(slave.selects, 1);
}

TEST(Bus, ModeMismatchCorrupts)
{
    Scheduler sched;
    SpiBus bus(sched, SpiConfig{}); // Mode 2
    ScriptedSlave slave(SpiFormat{{0, 0}, true});
    bus.add_line(ChipSelect{0}, slave);
    slave.queued.push_back(0xA3);
    bus.select(ChipSelect{0});
    EXPECT_NE(bus.transfer(ChipSelect{0}, 0x5A), 0xA3);
    EXPECT_NE(slave.received.at(0), 0x5A);
}

TEST(Bus, RegisterFlags)
{
    Scheduler sched;
    SpiBus bus(sched, SpiConfig{});
    ScriptedSlave slave;
    bus.add_line(ChipSelect{0}, slave);
    bus.select(ChipSelect{0});
    EXPECT_FALSE(bus.rx_ready());
    slave.queued.push_back(0x42);
    bus.write_tx(ChipSelect{0}, 0x11);
    EXPECT_TRUE(bus.rx_ready());
    EXPECT_TRUE(bus.tx_ready());
    EXPECT_EQ(bus.read_rx(), 0x42);
    EXPECT_FALSE(bus.rx_ready());
}

TEST(Bus, SelectionErrors)
{
    Scheduler sched;
    SpiBus bus(sched, SpiConfig{});
    ScriptedSlave a, b;
    bus.add_line(ChipSelect{1}, a);
    bus.add_line(ChipSelect{2}, b);
    try {
        bus.transfer(ChipSelect{1}, 0);
        FAIL();
    } catch (const SpiError& e) {
        EXPECT_EQ(e.code(), SpiErrc::NoSlaveSelected);
    }
    EXPECT_THROW(bus.select(ChipSelect{9}), SpiError);
    EXPECT_THROW(bus.add_line(ChipSelect{1}, b), SpiError);
    EXPECT_THROW(bus.receive_multi(ChipSelect{1}, 0), SpiError);
}

TEST(Bus, RoutingByChipSelect)
{
    Scheduler sched;
    SpiBus bus(sched, SpiConfig{});
    ScriptedSlave cmd, data;
    bus.add_line(ChipSelect{1}, cmd);
    bus.add_line(ChipSelect{2}, data);
    bus.select(ChipSelect{2});
    bus.transfer(ChipSelect{2}, 0x77);
    bus.deselect(ChipSelect{2});
    EXPECT_TRUE(cmd.received.empty());
    EXPECT_EQ(data.received, (std::vector<std::uint8_t>{0x77}));
    EXPECT_EQ(data.deselects, 1);
}

TEST(Bus, ReceiveMultiSendsDummyBytes)
{
    Scheduler sched;
    SpiBus bus(sched, SpiConfig{});
    ScriptedSlave s;
    bus.add_line(ChipSelect{0}, s);
    std::mt19937 rng(3);
    std::vector<std::uint8_t> payload(512);
    for (auto& b : payload) {
        b = static_cast<std::uint8_t>(rng());
        s.queued.push_back(b);
    }
    bus.select(ChipSelect{0});
    std::vector<std::uint8_t> loop;
    for (int i = 0; i < 4; ++i) {
        loop.push_back(bus.receive(ChipSelect{0}));
    }
    const auto rest = bus.receive_multi(ChipSelect{0}, 508);
    loop.insert(loop.end(), rest.begin(), rest.end());
    EXPECT_EQ(loop, payload);
    EXPECT_EQ(s.received, std::vector<std::uint8_t>(512, 0xFF));
}

TEST(Bus, TransferTimeMatchesBitrate)
{
    for (std::uint32_t div : {4u, 24u, 120u, 400u, 7u}) {
        Scheduler sched;
        SpiConfig c;
        c.divisor = div;
        SpiBus bus(sched, c);
        ScriptedSlave s;
        bus.add_line(ChipSelect{0}, s);
        bus.select(ChipSelect{0});
        const std::size_t n = 1000;
        bus.receive_multi(ChipSelect{0}, n);
        const std::uint64_t hz = effective_bitrate(c).hz;
        const double exact = static_cast<double>(n) * 8.0 * 1e6 / static_cast<double>(hz);
        EXPECT_NEAR(static_cast<double>(sched.now()), exact, 1.0) << div;
        EXPECT_EQ(bus.busy_time(), sched.now());
    }
}

TEST(Bus, IdleClocksReachDeselectedSlaves)
{
    Scheduler sched;
    SpiBus bus(sched, SpiConfig{});
    ScriptedSlave s;
    bus.add_line(ChipSelect{0}, s);
    bus.idle_clocks(10);
    EXPECT_EQ(s.idle, 80u);
    EXPECT_TRUE(s.received.empty());
}

TEST(Bus, TraceFormat)
{
    Scheduler sched;
    SpiBus bus(sched, SpiConfig{});
    ScriptedSlave s(SpiFormat{{0, 1}, true});
    bus.add_line(ChipSelect{1}, s);
    std::vector<std::string> lines;
    bus.set_trace([&](const BusTraceEntry& e) { lines.push_back(format_trace(e)); });
    bus.select(ChipSelect{1});
    s.queued.push_back(0x00);
    bus.transfer(ChipSelect{1}, 0xAB);
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_EQ(lines[0].rfind("t=", 0), 0u);
    EXPECT_NE(lines[0].find(" cs=1 mosi=AB miso="), std::string::npos);
    EXPECT_NE(lines[0].find(" mode=2/1"), std::string::npos);
}
