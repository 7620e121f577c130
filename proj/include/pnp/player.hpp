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
    Player firmware. handle_button() is the pure mode machine; Player wires
    it to the FAT volume, the codec host, the LCD driver and the IR receiver
    and runs the main-loop body (pump).
*/
#pragma once

#include "pnp/codec.hpp"
#include "pnp/fat32.hpp"
#include "pnp/ir_nec.hpp"
#include "pnp/lcd.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pnp::app {

using ir::RemoteButton;

enum class Mode { Menu, Music, Reader };

const char* mode_name(Mode m) noexcept;

inline constexpr unsigned kVolumeSteps = 16;
inline constexpr unsigned kDefaultVolumeStep = 12;

// Step 15 is full scale; each step below adds 8 dB of attenuation on
// both channels.
std::uint16_t volume_register(unsigned step);

struct MusicState {
    std::size_t track_index = 0;
    bool playing = false;
    unsigned volume_step = kDefaultVolumeStep;

    bool operator==(const MusicState&) const = default;
};

struct ReaderState {
    std::size_t file_index = 0;
    std::size_t scroll_line = 0;
    std::size_t line_count = 0;
    unsigned rows = 2;

    std::size_t max_scroll() const noexcept { return line_count > rows ? line_count - rows : 0; }
    bool operator==(const ReaderState&) const = default;
};

struct AppState {
    Mode mode = Mode::Menu;
    MusicState music;
    ReaderState reader;
    std::vector<std::string> music_files;
    std::vector<std::string> text_files;
    std::string message; // shown instead of the menu until dismissed
    bool halted = false;

    bool operator==(const AppState&) const = default;
};

namespace action {
struct ShowMenu {
    bool operator==(const ShowMenu&) const = default;
};
struct ShowMessage {
    std::string text;
    bool operator==(const ShowMessage&) const = default;
};
struct StartTrack {
    std::size_t index;
    bool operator==(const StartTrack&) const = default;
};
struct StopPlayback {
    bool operator==(const StopPlayback&) const = default;
};
struct SetPaused {
    bool paused;
    bool operator==(const SetPaused&) const = default;
};
struct SetVolume {
    unsigned step;
    bool operator==(const SetVolume&) const = default;
};
struct ShowMusic {
    bool operator==(const ShowMusic&) const = default;
};
struct OpenText {
    std::size_t index;
    bool operator==(const OpenText&) const = default;
};
struct ShowPage {
    std::size_t line;
    bool operator==(const ShowPage&) const = default;
};
struct Halt {
    bool operator==(const Halt&) const = default;
};
} // namespace action

using Action = std::variant<action::ShowMenu, action::ShowMessage, action::StartTrack, action::StopPlayback,
                            action::SetPaused, action::SetVolume, action::ShowMusic, action::OpenText,
                            action::ShowPage, action::Halt>;

struct Transition {
    AppState state;
    std::vector<Action> actions;
};

// Music: .MP3 and .WAV; text: .TXT. Directories and everything else are
// ignored. On-disk order is kept.
void populate_files(AppState& state, const std::vector<fat::DirEntry>& root);

// `is_repeat` marks an NEC repeat code for the last button; only volume
// and scrolling act on repeats.
Transition handle_button(const AppState& state, RemoteButton button, bool is_repeat = false);

// CRLF and lone CR become LF; the result is split into lines. A trailing
// newline does not start an extra line.
std::vector<std::string> split_lines(std::string_view text);

struct PlayerOptions {
    ir::NecTimings timings{};
    std::uint8_t address = ir::kRemoteAddress;
    std::size_t chunk_size = codec::kSdiChunk;
    std::size_t text_read_size = 64;
};

struct PumpResult {
    std::optional<ir::IrEvent> ir_event;
    std::optional<RemoteButton> button;
    std::size_t chunk_bytes = 0;
    bool chunk_attempted = false;
    bool dreq_at_chunk = false;
};

class Player {
public:
    Player(fat::Volume volume, codec::CodecHost& codec, lcd::LcdDriver& lcd, lcd::LcdGeometry geometry,
           ir::ButtonMap mapping, PlayerOptions options = {});

    // Scans the root directory and prints the main menu.
    void boot();

    // Main-loop body: dispatches at most one latched IR transmission, then
    // offers at most one SDI chunk.
    PumpResult pump(ir::IrReceiver& receiver);

    void press(RemoteButton button, bool is_repeat = false);

    const AppState& state() const noexcept { return m_state; }
    const std::vector<std::string>& visible_lines() const noexcept { return m_page; }
    std::optional<RemoteButton> last_button() const noexcept { return m_last_button; }
    std::uint64_t streamed_bytes() const noexcept { return m_streamed; }
    std::uint64_t tracks_started() const noexcept { return m_tracks_started; }

    // Called with the file name whenever a track starts streaming.
    void on_track_start(std::function<void(const std::string&)> cb) { m_on_track = std::move(cb); }

    // Fills the LCD from scroll_line of the open text file.
    void read_text_page();

private:
    void apply(const Action& a);
    void start_track(std::size_t index);
    void draw_music();
    std::size_t stream_chunk(PumpResult& r);

    fat::Volume m_volume;
    codec::CodecHost& m_codec;
    lcd::LcdDriver& m_lcd;
    lcd::LcdGeometry m_geo;
    ir::ButtonMap m_map;
    PlayerOptions m_opts;

    AppState m_state;
    std::optional<RemoteButton> m_last_button;
    std::optional<fat::FileHandle> m_track;
    std::vector<std::uint8_t> m_pending;
    std::vector<std::string> m_page;
    std::uint64_t m_streamed = 0;
    std::uint64_t m_tracks_started = 0;
    std::function<void(const std::string&)> m_on_track;
};

} // namespace pnp::app
