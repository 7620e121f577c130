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
/*
    The whole board on one scheduler: SD card, codec and LCD models, their
    drivers, the IR receiver and the player firmware. Remote presses enter as
    IR edges in virtual time and go through the full decode path.
*/
#pragma once

#include "pnp/codec.hpp"
#include "pnp/fat32.hpp"
#include "pnp/ir_nec.hpp"
#include "pnp/lcd.hpp"
#include "pnp/player.hpp"
#include "pnp/sd.hpp"
#include "pnp/simcore.hpp"
#include "pnp/spi.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnp::sim {

inline constexpr spi::ChipSelect kSdCs{0};
inline constexpr spi::ChipSelect kCodecCommandCs{1};
inline constexpr spi::ChipSelect kCodecDataCs{2};

// SD card on its own bus, for tools that only need the filesystem.
struct CardStack {
    explicit CardStack(DiskImage& image, sd::SdCardOptions card = {}, sd::SdHostOptions host = {});

    Scheduler scheduler;
    spi::SpiBus bus;
    sd::SdCardModel card;
    sd::SdHost host;
    sd::SdBlockDevice device;
};

struct ScriptEvent {
    enum class Kind { Press, Hold, Snapshot };

    Micros at = 0;
    Kind kind = Kind::Snapshot;
    ir::RemoteButton button = ir::RemoteButton::Power;
    Micros hold = 0;
    unsigned line = 0;

    bool operator==(const ScriptEvent&) const = default;
};

class ScriptError : public std::runtime_error {
public:
    ScriptError(unsigned line, const std::string& what)
        : std::runtime_error("script line " + std::to_string(line) + ": " + what), m_line(line)
    {
    }
    unsigned line() const noexcept { return m_line; }

private:
    unsigned m_line;
};

// Lines `t=<ms> press <BUTTON>`, `t=<ms> hold <BUTTON> <ms>`,
// `t=<ms> snapshot`. `#` starts a comment. Events come back sorted by time,
// keeping file order for equal times.
std::vector<ScriptEvent> parse_script(std::istream& in);

struct BoardOptions {
    sd::SdCardOptions card{};
    sd::SdHostOptions sd_host{};
    codec::CodecConfig codec{};
    codec::CodecHostOptions codec_host{};
    lcd::LcdGeometry geometry{};
    ir::ButtonMap buttons = ir::ButtonMap::defaults();
    ir::NecTimings timings{};
    app::PlayerOptions player{};
    std::uint64_t spi_source_hz = 48'000'000;
    Micros tick = 1000; // timer ISR and main-loop cadence
    // Stream byte rate per file extension; others use the codec default.
    std::map<std::string, std::uint64_t> bitrate_by_extension{{"MP3", 64'000}, {"WAV", 128'000}};
};

struct MonitorReport {
    std::uint64_t pumps = 0;
    std::uint64_t chunks = 0;
    std::size_t max_chunk = 0;
    std::vector<std::string> violations;

    bool ok() const noexcept { return violations.empty(); }
};

class Board {
public:
    explicit Board(DiskImage image, BoardOptions options = {});
    Board(const Board&) = delete;
    Board& operator=(const Board&) = delete;

    // SD init, mount, codec hardware and software init, LCD init, boot.
    void power_up();
    bool powered() const noexcept { return m_player != nullptr; }

    // Schedules the remote's IR edges starting at `at`.
    void send_ir(Micros at, const ir::PulseTrain& train);
    void press(Micros at, ir::RemoteButton button, Micros hold = 0);

    // Main loop: pump, then sleep to the next tick, until `t` or a halt.
    void run_until(Micros t);
    bool halted() const;

    std::string snapshot();
    const MonitorReport& monitors() const noexcept { return m_report; }

    void set_bus_trace(std::function<void(const std::string&)> sink);

    Scheduler& scheduler() noexcept { return m_sched; }
    spi::SpiBus& bus() noexcept { return m_bus; }
    DiskImage& image() noexcept { return m_image; }
    sd::SdCardModel& card() noexcept { return m_card; }
    sd::SdHost& sd_host() noexcept { return m_sd; }
    codec::CodecModel& codec() noexcept { return m_codec; }
    codec::CodecHost& codec_host() noexcept { return m_codec_host; }
    lcd::LcdModel& lcd() noexcept { return m_lcd; }
    ir::IrReceiver& receiver() noexcept { return m_receiver; }
    app::Player& player();
    const BoardOptions& options() const noexcept { return m_opts; }

private:
    void check_invariants(const app::PumpResult& r);

    BoardOptions m_opts;
    DiskImage m_image;
    Scheduler m_sched;
    spi::SpiBus m_bus;
    sd::SdCardModel m_card;
    codec::CodecModel m_codec;
    lcd::LcdModel m_lcd;
    sd::SdHost m_sd;
    sd::SdBlockDevice m_block;
    codec::CodecHost m_codec_host;
    lcd::LcdDriver m_lcd_driver;
    ir::IrReceiver m_receiver;
    std::unique_ptr<app::Player> m_player;
    MonitorReport m_report;
    EventId m_tick_handle = 0;
};

struct ScriptRun {
    std::string snapshots; // concatenated snapshot blocks
    std::size_t snapshot_count = 0;
    bool halted = false;
    MonitorReport monitors;
};

// Schedules every remote event, powers the board up and replays the script.
ScriptRun run_script(Board& board, const std::vector<ScriptEvent>& events);

// Keys: p a b c, arrow keys, Enter (center), q or end of input to quit.
// Each key is sent as an IR frame and the LCD is redrawn afterwards.
void run_interactive(Board& board, std::istream& keys, std::ostream& screen);

} // namespace pnp::sim
