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
    NEC infrared remote protocol: pulse-distance encoder, slot-timing capture,
    decoder, and the remote's button table.

    Bits are assembled MSB-first, so a frame for address 0x10 starts with the
    16-bit word 0x10EF (address followed by its inverse). That is the word the
    receiver firmware filters on. Off-the-shelf NEC decoders assemble LSB-first.
*/
#pragma once

#include "pnp/simcore.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pnp::ir {

enum class Level : std::uint8_t { Mark, Space };

struct Segment {
    Level level;
    Micros duration;

    bool operator==(const Segment&) const = default;
};

class PulseTrainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Ordered mark/space intervals. Levels strictly alternate and every
// duration is positive.
class PulseTrain {
public:
    PulseTrain() = default;
    explicit PulseTrain(std::vector<Segment> segments);

    void push(Level level, Micros duration);
    void append(const PulseTrain& other);

    std::span<const Segment> segments() const noexcept { return m_segments; }
    std::size_t size() const noexcept { return m_segments.size(); }
    bool empty() const noexcept { return m_segments.empty(); }
    const Segment& operator[](std::size_t i) const { return m_segments[i]; }
    Micros total_duration() const noexcept;

    bool operator==(const PulseTrain&) const = default;

private:
    std::vector<Segment> m_segments;
};

// Nominal protocol timings. The 562.5 us pulse is stored as 562 us; the
// half microsecond is absorbed by the tolerance window.
struct NecTimings {
    Micros agc_mark = 9000;
    Micros header_space = 4500;
    Micros bit_mark = 562;
    Micros one_space = 1687;
    Micros zero_space = 562;
    Micros trailer_mark = 562;
    Micros repeat_space = 2250;
    Micros repeat_period = 110000;
    // Nominal mark-start to mark-start slot lengths used for classification.
    Micros one_slot = 2250;
    Micros zero_slot = 1125;
    // Accepted deviation as a fraction of each nominal duration.
    double tolerance = 0.20;
};

inline constexpr std::uint8_t kRemoteAddress = 0x10;

struct IrFrame {
    std::uint8_t address = 0;
    std::uint8_t address_inv = 0;
    std::uint8_t command = 0;
    std::uint8_t command_inv = 0;

    bool operator==(const IrFrame&) const = default;
};

struct Repeat {
    bool operator==(const Repeat&) const = default;
};

struct Garbage {
    std::string reason;

    bool operator==(const Garbage&) const = default;
};

using IrEvent = std::variant<IrFrame, Repeat, Garbage>;

enum class CaptureErrc { NoStartCondition, TruncatedTrain };

class CaptureError : public std::runtime_error {
public:
    CaptureError(CaptureErrc code, const std::string& what) : std::runtime_error(what), m_code(code) {}
    CaptureErrc code() const noexcept { return m_code; }

private:
    CaptureErrc m_code;
};

using SlotCapture = std::array<Micros, 32>;

// True when `measured` lies within nominal*(1 +/- tolerance).
bool within_tolerance(Micros measured, Micros nominal, double tolerance) noexcept;

PulseTrain encode_frame(std::uint8_t address, std::uint8_t command, const NecTimings& timings = {});
PulseTrain encode_repeat(const NecTimings& timings = {});

// Frame followed by repeat codes while the key is held. The first repeat
// starts one repeat_period after the frame starts; repeat k is sent iff
// k * repeat_period <= hold. Gaps between transmissions are spaces.
PulseTrain encode_hold(std::uint8_t address, std::uint8_t command, Micros hold,
                       const NecTimings& timings = {});

// Number of repeat codes encode_hold emits for a given hold time.
std::size_t repeat_count(Micros hold, const NecTimings& timings = {});

// Receiver timer capture: checks the start condition, then records the 32
// mark-start to mark-start slot durations.
SlotCapture capture_bits(const PulseTrain& train, const NecTimings& timings = {});

std::optional<bool> classify_slot(Micros slot, const NecTimings& timings = {});

IrEvent decode(const PulseTrain& train, const NecTimings& timings = {},
               std::uint8_t accepted_address = kRemoteAddress);

// Splits a captured stream into transmissions at any space of at least
// `gap` microseconds. Leading and trailing spaces are dropped.
std::vector<PulseTrain> split_transmissions(const PulseTrain& stream, Micros gap = 20000);

std::vector<IrEvent> decode_stream(const PulseTrain& stream, const NecTimings& timings = {},
                                   std::uint8_t accepted_address = kRemoteAddress);

// Capture file: one `mark,<us>` or `space,<us>` per line, `#` comments.
PulseTrain read_capture(std::istream& in);
void write_capture(std::ostream& out, const PulseTrain& train);

// ---------------------------------------------------------------------------
// Remote buttons

enum class RemoteButton : std::uint8_t { Power, A, B, C, Up, Left, Right, Down, Center };

inline constexpr std::array<RemoteButton, 9> kAllButtons = {
    RemoteButton::Power, RemoteButton::A,     RemoteButton::B,    RemoteButton::C,     RemoteButton::Up,
    RemoteButton::Left,  RemoteButton::Right, RemoteButton::Down, RemoteButton::Center,
};

std::string_view button_name(RemoteButton b) noexcept;
std::optional<RemoteButton> parse_button(std::string_view name);

class MappingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// command byte -> button. Text form: lines `<hex-command>=<button-name>`.
class ButtonMap {
public:
    ButtonMap() = default;

    static ButtonMap defaults();
    static ButtonMap parse(std::istream& in);

    void set(std::uint8_t command, RemoteButton button);
    std::optional<RemoteButton> lookup(std::uint8_t command) const;
    std::optional<std::uint8_t> command_for(RemoteButton button) const;
    std::size_t size() const noexcept { return m_table.size(); }
    const std::map<std::uint8_t, RemoteButton>& table() const noexcept { return m_table; }

private:
    std::map<std::uint8_t, RemoteButton> m_table;
};

// nullopt means Unmapped.
std::optional<RemoteButton> match_button(const IrFrame& frame, const ButtonMap& mapping);

// ---------------------------------------------------------------------------
// Receiver front end

// Edge-timestamping receiver. The demodulated line is fed one edge at a time
// in virtual time; once the line has been idle for `idle_gap`, the collected
// transmission is latched and the data-received flag is raised.
class IrReceiver {
public:
    explicit IrReceiver(Micros idle_gap = 20000) : m_idle_gap(idle_gap) {}

    // `level` is the line level after the edge.
    void on_edge(Micros now, Level level);
    // Latches the pending transmission if the line has been quiet long enough.
    void on_idle_check(Micros now);

    bool data_received() const noexcept { return !m_ready.empty(); }
    // Returns the oldest latched transmission and clears it from the flag.
    PulseTrain take();

    Micros idle_gap() const noexcept { return m_idle_gap; }

private:
    Micros m_idle_gap;
    PulseTrain m_current;
    std::optional<Micros> m_last_edge;
    Level m_level = Level::Space;
    std::deque<PulseTrain> m_ready;
};

} // namespace pnp::ir
