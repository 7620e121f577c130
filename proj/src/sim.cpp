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
#include "pnp/sim.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace pnp::sim {

namespace {

spi::SpiConfig master_config(std::uint64_t source_hz)
{
    spi::SpiConfig c;
    c.source_clock_hz = source_hz;
    c.divisor = spi::divisor_for(source_hz, 400'000);
    return c;
}

std::string hex16(std::uint16_t v)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%04X", v);
    return buf;
}

std::string ms_label(Micros t)
{
    std::string s = std::to_string(t / kMillis);
    if (t % kMillis) {
        char frac[8];
        std::snprintf(frac, sizeof frac, ".%03llu", static_cast<unsigned long long>(t % kMillis));
        s += frac;
    }
    return s + "ms";
}

} // namespace

CardStack::CardStack(DiskImage& image, sd::SdCardOptions card_opts, sd::SdHostOptions host_opts)
    : bus(scheduler, master_config(48'000'000)), card(image, card_opts), host(bus, kSdCs, host_opts), device(host)
{
    bus.add_line(kSdCs, card);
}

std::vector<ScriptEvent> parse_script(std::istream& in)
{
    std::vector<ScriptEvent> events;
    std::string raw;
    unsigned lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string_view line = text::trim(text::strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        std::istringstream words{std::string(line)};
        std::string time, verb;
        words >> time >> verb;
        if (time.rfind("t=", 0) != 0) {
            throw ScriptError(lineno, "expected t=<ms>, got '" + time + "'");
        }
        const auto ms = text::parse_uint(std::string_view(time).substr(2));
        if (!ms) {
            throw ScriptError(lineno, "bad time '" + time + "'");
        }
        ScriptEvent ev;
        ev.at = *ms * kMillis;
        ev.line = lineno;
        verb = text::to_lower(verb);
        if (verb == "press" || verb == "hold") {
            std::string name;
            if (!(words >> name)) {
                throw ScriptError(lineno, verb + " needs a button name");
            }
            const auto b = ir::parse_button(name);
            if (!b) {
                throw ScriptError(lineno, "unknown button '" + name + "'");
            }
            ev.button = *b;
            ev.kind = verb == "press" ? ScriptEvent::Kind::Press : ScriptEvent::Kind::Hold;
            if (ev.kind == ScriptEvent::Kind::Hold) {
                std::string hold;
                const auto hms = (words >> hold) ? text::parse_uint(hold) : std::nullopt;
                if (!hms) {
                    throw ScriptError(lineno, "hold needs a duration in ms");
                }
                ev.hold = *hms * kMillis;
            }
        } else if (verb == "snapshot") {
            ev.kind = ScriptEvent::Kind::Snapshot;
        } else {
            throw ScriptError(lineno, "unknown directive '" + verb + "'");
        }
        std::string extra;
        if (words >> extra) {
            throw ScriptError(lineno, "unexpected '" + extra + "'");
        }
        events.push_back(ev);
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ScriptEvent& a, const ScriptEvent& b) { return a.at < b.at; });
    return events;
}

// ---------------------------------------------------------------------------

Board::Board(DiskImage image, BoardOptions options)
    : m_opts(std::move(options)), m_image(std::move(image)), m_bus(m_sched, master_config(m_opts.spi_source_hz)),
      m_card(m_image, m_opts.card), m_codec(m_opts.codec), m_lcd(m_opts.geometry),
      m_sd(m_bus, kSdCs, m_opts.sd_host), m_block(m_sd),
      m_codec_host(m_bus, m_codec, codec::CodecPins{kCodecCommandCs, kCodecDataCs}, m_opts.codec_host),
      m_lcd_driver(m_lcd, m_sched), m_receiver(20 * kMillis)
{
    m_bus.add_line(kSdCs, m_card);
    m_bus.add_line(kCodecCommandCs, m_codec.command_port());
    m_bus.add_line(kCodecDataCs, m_codec.data_port());
    m_opts.player.timings = m_opts.timings;

    m_tick_handle = m_sched.schedule_every(m_opts.tick, m_opts.tick, "tick", [this] {
        const Micros now = m_sched.now();
        m_sd.disk_timeproc();
        m_codec.sync(now);
        m_receiver.on_idle_check(now);
    });
}

app::Player& Board::player()
{
    if (!m_player) {
        throw std::logic_error("board is not powered up");
    }
    return *m_player;
}

void Board::power_up()
{
    m_sd.disk_initialize();
    fat::Volume volume = fat::Volume::mount(m_block);
    m_codec_host.vs_test_init_hardware();
    m_codec_host.vs_test_init_software();
    m_lcd_driver.init();

    m_player = std::make_unique<app::Player>(volume, m_codec_host, m_lcd_driver, m_opts.geometry, m_opts.buttons,
                                             m_opts.player);
    m_player->on_track_start([this](const std::string& name) {
        const auto dot = name.rfind('.');
        const std::string ext = dot == std::string::npos ? "" : text::to_upper(name.substr(dot + 1));
        const auto it = m_opts.bitrate_by_extension.find(ext);
        m_codec.set_bitrate(it == m_opts.bitrate_by_extension.end() ? m_opts.codec.bitrate_bps : it->second);
    });
    m_player->boot();
}

void Board::send_ir(Micros at, const ir::PulseTrain& train)
{
    Micros t = at;
    for (const ir::Segment& seg : train.segments()) {
        m_sched.schedule(t, "ir-edge", [this, level = seg.level] { m_receiver.on_edge(m_sched.now(), level); });
        t += seg.duration;
    }
    m_sched.schedule(t, "ir-edge", [this] { m_receiver.on_edge(m_sched.now(), ir::Level::Space); });
}

void Board::press(Micros at, ir::RemoteButton button, Micros hold)
{
    const auto cmd = m_opts.buttons.command_for(button);
    if (!cmd) {
        throw ir::MappingError(std::string("button ") + std::string(ir::button_name(button)) + " is not mapped");
    }
    send_ir(at, ir::encode_hold(ir::kRemoteAddress, *cmd, hold, m_opts.timings));
}

bool Board::halted() const
{
    return m_player && m_player->state().halted;
}

void Board::check_invariants(const app::PumpResult& r)
{
    ++m_report.pumps;
    if (r.chunk_bytes > 0) {
        ++m_report.chunks;
        m_report.max_chunk = std::max(m_report.max_chunk, r.chunk_bytes);
    }
    auto flag = [this](const std::string& what) {
        const std::string msg = "t=" + std::to_string(m_sched.now()) + " " + what;
        const bool seen = std::any_of(m_report.violations.begin(), m_report.violations.end(),
                                      [&](const std::string& v) { return v.find(what) != std::string::npos; });
        if (!seen) {
            m_report.violations.push_back(msg);
        }
    };
    if (r.chunk_bytes > codec::kSdiChunk || m_codec.sdi_oversize_bursts() > 0) {
        flag("SDI chunk larger than 32 bytes");
    }
    if (m_codec.sdi_bursts_without_dreq() > 0) {
        flag("SDI chunk issued while DREQ was low");
    }
    if (m_codec_host.sdi_bytes_sent() != m_codec.accepted_bytes() + m_codec.dropped_bytes()) {
        flag("SDI bytes sent do not match bytes seen by the codec");
    }
    if (m_codec.accepted_bytes() != m_codec.fifo_size() + m_codec.consumed_bytes() + m_codec.discarded_bytes()) {
        flag("codec byte conservation broken");
    }
    if (m_codec.dreq(m_sched.now()) && m_codec.fifo_free() < codec::kSdiChunk) {
        flag("DREQ high with less than 32 bytes free");
    }
}

void Board::run_until(Micros t)
{
    app::Player& p = player();
    while (!p.state().halted && m_sched.now() < t) {
        check_invariants(p.pump(m_receiver));
        if (p.state().halted) {
            break;
        }
        const Micros now = m_sched.now();
        if (now >= t) {
            break;
        }
        const Micros next = (now / m_opts.tick + 1) * m_opts.tick;
        m_sched.advance(std::min(next, t));
    }
}

std::string Board::snapshot()
{
    const Micros now = m_sched.now();
    const app::AppState& s = player().state();
    std::ostringstream o;
    o << "== snapshot t=" << ms_label(now) << " ==\n";
    o << "mode: " << app::mode_name(s.mode) << (s.halted ? " (halted)" : "") << "\n";
    if (s.music_files.empty()) {
        o << "music: none\n";
    } else {
        o << "music: track=" << s.music.track_index + 1 << "/" << s.music_files.size()
          << " file=" << s.music_files[s.music.track_index] << " playing=" << s.music.playing
          << " volume_step=" << s.music.volume_step << "\n";
    }
    if (s.mode == app::Mode::Reader) {
        o << "reader: file=" << s.text_files[s.reader.file_index] << " scroll=" << s.reader.scroll_line << "/"
          << s.reader.max_scroll() << " lines=" << s.reader.line_count << "\n";
    }
    if (!s.message.empty()) {
        o << "message: " << s.message << "\n";
    }
    o << "lcd:\n";
    for (const auto& row : m_lcd.render()) {
        o << "  |" << row << "|\n";
    }
    o << "codec: accepted=" << m_codec.accepted_bytes() << " consumed=" << m_codec.consumed_bytes()
      << " fifo=" << m_codec.fifo_size() << " dreq=" << m_codec.dreq(now) << " paused=" << m_codec.paused()
      << " fast_mode=" << m_codec.fast_mode() << " bitrate=" << m_codec.bitrate() << "\n";
    o << "codec regs: MODE=" << hex16(m_codec.peek(codec::reg::MODE))
      << " VOL=" << hex16(m_codec.peek(codec::reg::VOL)) << " CLOCKF=" << hex16(m_codec.peek(codec::reg::CLOCKF))
      << " DECODE_TIME=" << m_codec.peek(codec::reg::DECODE_TIME) << "\n";
    o << "sd: commands=" << m_card.commands_received() << " crc_failures=" << m_card.crc_failures() << "\n";
    o << "monitors: pumps=" << m_report.pumps << " chunks=" << m_report.chunks << " max_chunk=" << m_report.max_chunk
      << " violations=" << m_report.violations.size() << "\n";
    return o.str();
}

void Board::set_bus_trace(std::function<void(const std::string&)> sink)
{
    if (!sink) {
        m_bus.set_trace({});
        return;
    }
    m_bus.set_trace([sink = std::move(sink)](const spi::BusTraceEntry& e) { sink(spi::format_trace(e)); });
}

ScriptRun run_script(Board& board, const std::vector<ScriptEvent>& events)
{
    Micros end = 0;
    for (const ScriptEvent& ev : events) {
        end = std::max(end, ev.at);
        if (ev.kind != ScriptEvent::Kind::Snapshot) {
            board.press(ev.at, ev.button, ev.hold);
        }
    }
    board.power_up();

    ScriptRun run;
    for (const ScriptEvent& ev : events) {
        if (ev.kind != ScriptEvent::Kind::Snapshot) {
            continue;
        }
        board.run_until(ev.at);
        if (board.halted()) {
            break;
        }
        run.snapshots += board.snapshot();
        ++run.snapshot_count;
    }
    if (!board.halted()) {
        board.run_until(end);
    }
    run.halted = board.halted();
    run.monitors = board.monitors();
    return run;
}

void run_interactive(Board& board, std::istream& keys, std::ostream& screen)
{
    board.power_up();
    const Micros settle = 200 * kMillis; // frame, receiver idle gap, redraw
    auto draw = [&](const std::string& key) {
        const auto& s = board.player().state();
        screen << "[" << key << "] t=" << ms_label(board.scheduler().now()) << " mode=" << app::mode_name(s.mode)
               << "\n";
        const std::string border = "+" + std::string(board.lcd().geometry().cols, '-') + "+";
        screen << border << "\n";
        for (const auto& row : board.lcd().render()) {
            screen << "|" << row << "|\n";
        }
        screen << border << "\n" << std::flush;
    };
    board.run_until(board.scheduler().now() + settle);
    draw("boot");

    int c;
    while (!board.halted() && (c = keys.get()) != std::char_traits<char>::eof()) {
        std::optional<ir::RemoteButton> b;
        switch (c) {
        case 'p': case 'P': b = ir::RemoteButton::Power; break;
        case 'a': case 'A': b = ir::RemoteButton::A; break;
        case 'b': case 'B': b = ir::RemoteButton::B; break;
        case 'c': case 'C': b = ir::RemoteButton::C; break;
        case '\r': case '\n': b = ir::RemoteButton::Center; break;
        case 'q': case 'Q': return;
        case 0x1B:
            if (keys.get() == '[') {
                switch (keys.get()) {
                case 'A': b = ir::RemoteButton::Up; break;
                case 'B': b = ir::RemoteButton::Down; break;
                case 'C': b = ir::RemoteButton::Right; break;
                case 'D': b = ir::RemoteButton::Left; break;
                default: break;
                }
            }
            break;
        default: break;
        }
        if (!b) {
            continue;
        }
        const Micros at = (board.scheduler().now() / kMillis + 1) * kMillis;
        board.press(at, *b);
        board.run_until(at + settle);
        draw(std::string(ir::button_name(*b)));
    }
}

} // namespace pnp::sim
