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

#include "text_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace pnp::ir {

// ---------------------------------------------------------------------------
// PulseTrain

PulseTrain::PulseTrain(std::vector<Segment> segments)
{
    m_segments.reserve(segments.size());
    for (const auto& s : segments) {
        push(s.level, s.duration);
    }
}

void PulseTrain::push(Level level, Micros duration)
{
    if (duration == 0) {
        throw PulseTrainError("pulse train segments must have a positive duration");
    }
    if (!m_segments.empty() && m_segments.back().level == level) {
        throw PulseTrainError("pulse train levels must alternate between mark and space");
    }
    m_segments.push_back({level, duration});
}

void PulseTrain::append(const PulseTrain& other)
{
    for (const auto& s : other.segments()) {
        push(s.level, s.duration);
    }
}

Micros PulseTrain::total_duration() const noexcept
{
    Micros total = 0;
    for (const auto& s : m_segments) {
        total += s.duration;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Encoding

bool within_tolerance(Micros measured, Micros nominal, double tolerance) noexcept
{
    const double lo = static_cast<double>(nominal) * (1.0 - tolerance);
    const double hi = static_cast<double>(nominal) * (1.0 + tolerance);
    const auto m = static_cast<double>(measured);
    return m >= lo && m <= hi;
}

PulseTrain encode_frame(std::uint8_t address, std::uint8_t command, const NecTimings& timings)
{
    PulseTrain train;
    train.push(Level::Mark, timings.agc_mark);
    train.push(Level::Space, timings.header_space);

    const std::array<std::uint8_t, 4> bytes = {
        address,
        static_cast<std::uint8_t>(~address),
        command,
        static_cast<std::uint8_t>(~command),
    };
    for (std::uint8_t byte : bytes) {
        for (int bit = 7; bit >= 0; --bit) {
            const bool one = (byte >> bit) & 1u;
            train.push(Level::Mark, timings.bit_mark);
            train.push(Level::Space, one ? timings.one_space : timings.zero_space);
        }
    }
    train.push(Level::Mark, timings.trailer_mark);
    return train;
}

PulseTrain encode_repeat(const NecTimings& timings)
{
    PulseTrain train;
    train.push(Level::Mark, timings.agc_mark);
    train.push(Level::Space, timings.repeat_space);
    train.push(Level::Mark, timings.trailer_mark);
    return train;
}

std::size_t repeat_count(Micros hold, const NecTimings& timings)
{
    return static_cast<std::size_t>(hold / timings.repeat_period);
}

PulseTrain encode_hold(std::uint8_t address, std::uint8_t command, Micros hold, const NecTimings& timings)
{
    PulseTrain train = encode_frame(address, command, timings);
    const PulseTrain repeat = encode_repeat(timings);
    const std::size_t repeats = repeat_count(hold, timings);
    for (std::size_t k = 1; k <= repeats; ++k) {
        const Micros start = k * timings.repeat_period;
        train.push(Level::Space, start - train.total_duration());
        train.append(repeat);
    }
    return train;
}

// ---------------------------------------------------------------------------
// Capture and decode

SlotCapture capture_bits(const PulseTrain& train, const NecTimings& timings)
{
    if (train.size() < 2) {
        throw CaptureError(CaptureErrc::TruncatedTrain, "pulse train ends before the start condition");
    }
    const Segment& agc = train[0];
    const Segment& header = train[1];
    if (agc.level != Level::Mark || !within_tolerance(agc.duration, timings.agc_mark, timings.tolerance) ||
        !within_tolerance(header.duration, timings.header_space, timings.tolerance)) {
        throw CaptureError(CaptureErrc::NoStartCondition, "no NEC start condition (AGC mark + header space)");
    }

    constexpr std::size_t kSlots = 32;
    if (train.size() < 2 + 2 * kSlots) {
        throw CaptureError(CaptureErrc::TruncatedTrain,
                           "pulse train holds fewer than 32 bit slots (" + std::to_string(train.size()) +
                               " segments)");
    }

    // Timer is halted, cleared and restarted at every mark start; what it
    // reads at the next mark start is the slot length.
    SlotCapture timer{};
    for (std::size_t i = 0; i < kSlots; ++i) {
        timer[i] = train[2 + 2 * i].duration + train[3 + 2 * i].duration;
    }
    return timer;
}

std::optional<bool> classify_slot(Micros slot, const NecTimings& timings)
{
    // Nearest nominal first, then the window check, so widening the
    // tolerance never changes an accepted classification.
    const auto dist = [slot](Micros nominal) {
        return slot > nominal ? slot - nominal : nominal - slot;
    };
    const bool one = dist(timings.one_slot) < dist(timings.zero_slot);
    const Micros nominal = one ? timings.one_slot : timings.zero_slot;
    if (!within_tolerance(slot, nominal, timings.tolerance)) {
        return std::nullopt;
    }
    return one;
}

namespace {

bool is_repeat_code(const PulseTrain& train, const NecTimings& t)
{
    return train.size() == 3 && train[0].level == Level::Mark &&
           within_tolerance(train[0].duration, t.agc_mark, t.tolerance) &&
           within_tolerance(train[1].duration, t.repeat_space, t.tolerance) &&
           within_tolerance(train[2].duration, t.trailer_mark, t.tolerance);
}

} // namespace

IrEvent decode(const PulseTrain& train, const NecTimings& timings, std::uint8_t accepted_address)
{
    if (is_repeat_code(train, timings)) {
        return Repeat{};
    }

    SlotCapture timer;
    try {
        timer = capture_bits(train, timings);
    } catch (const CaptureError& e) {
        return Garbage{e.code() == CaptureErrc::NoStartCondition ? "no-start" : "truncated"};
    }

    std::uint32_t word = 0;
    for (Micros slot : timer) {
        const auto bit = classify_slot(slot, timings);
        if (!bit) {
            return Garbage{"bad-slot"};
        }
        word = (word << 1) | (*bit ? 1u : 0u);
    }

    IrFrame frame;
    frame.address = static_cast<std::uint8_t>(word >> 24);
    frame.address_inv = static_cast<std::uint8_t>(word >> 16);
    frame.command = static_cast<std::uint8_t>(word >> 8);
    frame.command_inv = static_cast<std::uint8_t>(word);

    const std::uint16_t expected = static_cast<std::uint16_t>(
        (accepted_address << 8) | static_cast<std::uint8_t>(~accepted_address));
    if ((word >> 16) != expected) {
        return Garbage{frame.address != accepted_address ? "wrong-address" : "inverse-mismatch"};
    }
    if (static_cast<std::uint8_t>(~frame.command) != frame.command_inv) {
        return Garbage{"inverse-mismatch"};
    }
    return frame;
}

std::vector<PulseTrain> split_transmissions(const PulseTrain& stream, Micros gap)
{
    std::vector<PulseTrain> out;
    PulseTrain current;
    for (const auto& s : stream.segments()) {
        if (s.level == Level::Space && s.duration >= gap) {
            if (!current.empty()) {
                out.push_back(std::move(current));
                current = PulseTrain{};
            }
            continue;
        }
        if (current.empty() && s.level == Level::Space) {
            continue;
        }
        current.push(s.level, s.duration);
    }
    if (!current.empty()) {
        out.push_back(std::move(current));
    }
    return out;
}

std::vector<IrEvent> decode_stream(const PulseTrain& stream, const NecTimings& timings,
                                   std::uint8_t accepted_address)
{
    std::vector<IrEvent> events;
    for (const auto& t : split_transmissions(stream)) {
        events.push_back(decode(t, timings, accepted_address));
    }
    return events;
}

// ---------------------------------------------------------------------------
// Capture file

PulseTrain read_capture(std::istream& in)
{
    PulseTrain train;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = text::trim(text::strip_comment(line));
        if (body.empty()) {
            continue;
        }
        const auto comma = body.find(',');
        if (comma == std::string_view::npos) {
            throw PulseTrainError("capture line " + std::to_string(lineno) + ": expected <level>,<us>");
        }
        const std::string level = text::to_lower(text::trim(body.substr(0, comma)));
        const auto value = text::parse_uint(text::trim(body.substr(comma + 1)));
        if (!value) {
            throw PulseTrainError("capture line " + std::to_string(lineno) + ": bad duration");
        }
        Level lv;
        if (level == "mark") {
            lv = Level::Mark;
        } else if (level == "space") {
            lv = Level::Space;
        } else {
            throw PulseTrainError("capture line " + std::to_string(lineno) + ": unknown level '" + level + "'");
        }
        try {
            train.push(lv, *value);
        } catch (const PulseTrainError& e) {
            throw PulseTrainError("capture line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return train;
}

void write_capture(std::ostream& out, const PulseTrain& train)
{
    out << "# NEC capture, durations in microseconds\n";
    for (const auto& s : train.segments()) {
        out << (s.level == Level::Mark ? "mark," : "space,") << s.duration << '\n';
    }
}

// ---------------------------------------------------------------------------
// Buttons

std::string_view button_name(RemoteButton b) noexcept
{
    switch (b) {
    case RemoteButton::Power: return "POWER";
    case RemoteButton::A: return "A";
    case RemoteButton::B: return "B";
    case RemoteButton::C: return "C";
    case RemoteButton::Up: return "UP";
    case RemoteButton::Left: return "LEFT";
    case RemoteButton::Right: return "RIGHT";
    case RemoteButton::Down: return "DOWN";
    case RemoteButton::Center: return "CENTER";
    }
    return "?";
}

std::optional<RemoteButton> parse_button(std::string_view name)
{
    const std::string upper = text::to_upper(text::trim(name));
    for (RemoteButton b : kAllButtons) {
        if (button_name(b) == upper) {
            return b;
        }
    }
    return std::nullopt;
}

ButtonMap ButtonMap::defaults()
{
    // Keep in sync with config/remote.map.
    ButtonMap m;
    m.set(0x45, RemoteButton::Power);
    m.set(0x46, RemoteButton::A);
    m.set(0x47, RemoteButton::B);
    m.set(0x44, RemoteButton::C);
    m.set(0x40, RemoteButton::Up);
    m.set(0x07, RemoteButton::Left);
    m.set(0x09, RemoteButton::Right);
    m.set(0x19, RemoteButton::Down);
    m.set(0x15, RemoteButton::Center);
    return m;
}

ButtonMap ButtonMap::parse(std::istream& in)
{
    ButtonMap m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = text::trim(text::strip_comment(line));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        const auto where = "mapping line " + std::to_string(lineno);
        if (eq == std::string_view::npos) {
            throw MappingError(where + ": expected <hex-command>=<button-name>");
        }
        const auto cmd = text::parse_hex(text::trim(body.substr(0, eq)));
        if (!cmd || *cmd > 0xFF) {
            throw MappingError(where + ": command must be a hex byte");
        }
        const auto button = parse_button(body.substr(eq + 1));
        if (!button) {
            throw MappingError(where + ": unknown button '" + std::string(text::trim(body.substr(eq + 1))) + "'");
        }
        if (m.lookup(static_cast<std::uint8_t>(*cmd))) {
            throw MappingError(where + ": command listed twice");
        }
        m.set(static_cast<std::uint8_t>(*cmd), *button);
    }
    return m;
}

void ButtonMap::set(std::uint8_t command, RemoteButton button)
{
    m_table[command] = button;
}

std::optional<RemoteButton> ButtonMap::lookup(std::uint8_t command) const
{
    auto it = m_table.find(command);
    if (it == m_table.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::uint8_t> ButtonMap::command_for(RemoteButton button) const
{
    for (const auto& [cmd, b] : m_table) {
        if (b == button) {
            return cmd;
        }
    }
    return std::nullopt;
}

std::optional<RemoteButton> match_button(const IrFrame& frame, const ButtonMap& mapping)
{
    return mapping.lookup(frame.command);
}

// ---------------------------------------------------------------------------
// Receiver

void IrReceiver::on_edge(Micros now, Level level)
{
    if (level == m_level) {
        return;
    }
    if (m_last_edge) {
        const Micros duration = now - *m_last_edge;
        if (m_level == Level::Space && duration >= m_idle_gap) {
            on_idle_check(now);
        } else if (duration > 0 && !(m_level == Level::Space && m_current.empty())) {
            m_current.push(m_level, duration);
        }
    }
    m_level = level;
    m_last_edge = now;
}

void IrReceiver::on_idle_check(Micros now)
{
    if (m_level != Level::Space || m_current.empty() || !m_last_edge) {
        return;
    }
    if (now - *m_last_edge >= m_idle_gap) {
        m_ready.push_back(std::move(m_current));
        m_current = PulseTrain{};
    }
}

PulseTrain IrReceiver::take()
{
    if (m_ready.empty()) {
        return {};
    }
    PulseTrain t = std::move(m_ready.front());
    m_ready.pop_front();
    return t;
}

} // namespace pnp::ir
