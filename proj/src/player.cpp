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
#include "pnp/player.hpp"

#include "text_util.hpp"

#include <algorithm>

namespace pnp::app {

const char* mode_name(Mode m) noexcept
{
    switch (m) {
    case Mode::Menu: return "Menu";
    case Mode::Music: return "Music";
    case Mode::Reader: return "Reader";
    }
    return "?";
}

std::uint16_t volume_register(unsigned step)
{
    step = std::min(step, kVolumeSteps - 1);
    const unsigned att = (kVolumeSteps - 1 - step) * 16; // 0.5 dB units
    return static_cast<std::uint16_t>(att << 8 | att);
}

void populate_files(AppState& state, const std::vector<fat::DirEntry>& root)
{
    state.music_files.clear();
    state.text_files.clear();
    for (const auto& e : root) {
        if (e.is_directory()) {
            continue;
        }
        const std::string ext = text::to_upper(e.extension());
        if (ext == "MP3" || ext == "WAV") {
            state.music_files.push_back(e.name);
        } else if (ext == "TXT") {
            state.text_files.push_back(e.name);
        }
    }
}

Transition handle_button(const AppState& state, RemoteButton button, bool is_repeat)
{
    Transition t{state, {}};
    AppState& s = t.state;
    auto& out = t.actions;

    if (s.halted) {
        return t;
    }
    if (is_repeat && button != RemoteButton::Up && button != RemoteButton::Down) {
        return t;
    }
    if (button == RemoteButton::Power) {
        s.halted = true;
        if (s.mode == Mode::Music) {
            s.music.playing = false;
            out.push_back(action::StopPlayback{});
        }
        out.push_back(action::Halt{});
        return t;
    }

    switch (s.mode) {
    case Mode::Menu:
        if (is_repeat) {
            break;
        }
        if (button == RemoteButton::A) {
            if (s.music_files.empty()) {
                s.message = "No music files";
                out.push_back(action::ShowMessage{s.message});
                break;
            }
            s.message.clear();
            s.mode = Mode::Music;
            s.music.track_index = 0;
            s.music.playing = true;
            out.push_back(action::SetVolume{s.music.volume_step});
            out.push_back(action::StartTrack{0});
            out.push_back(action::ShowMusic{});
        } else if (button == RemoteButton::B) {
            if (s.text_files.empty()) {
                s.message = "No text files";
                out.push_back(action::ShowMessage{s.message});
                break;
            }
            s.message.clear();
            s.mode = Mode::Reader;
            s.reader.file_index = 0;
            s.reader.scroll_line = 0;
            s.reader.line_count = 0;
            out.push_back(action::OpenText{0});
            out.push_back(action::ShowPage{0});
        } else if (button == RemoteButton::C && !s.message.empty()) {
            s.message.clear();
            out.push_back(action::ShowMenu{});
        }
        break;

    case Mode::Music: {
        MusicState& m = s.music;
        const std::size_t n = s.music_files.size();
        switch (button) {
        case RemoteButton::Center:
            m.playing = !m.playing;
            out.push_back(action::SetPaused{!m.playing});
            out.push_back(action::ShowMusic{});
            break;
        case RemoteButton::Left:
        case RemoteButton::Right:
            m.track_index = button == RemoteButton::Right ? (m.track_index + 1) % n : (m.track_index + n - 1) % n;
            m.playing = true;
            out.push_back(action::StartTrack{m.track_index});
            out.push_back(action::ShowMusic{});
            break;
        case RemoteButton::Up:
            if (m.volume_step + 1 < kVolumeSteps) {
                ++m.volume_step;
                out.push_back(action::SetVolume{m.volume_step});
                out.push_back(action::ShowMusic{});
            }
            break;
        case RemoteButton::Down:
            if (m.volume_step > 0) {
                --m.volume_step;
                out.push_back(action::SetVolume{m.volume_step});
                out.push_back(action::ShowMusic{});
            }
            break;
        case RemoteButton::C:
            s.mode = Mode::Menu;
            m.playing = false;
            out.push_back(action::StopPlayback{});
            out.push_back(action::ShowMenu{});
            break;
        default:
            break;
        }
        break;
    }

    case Mode::Reader:
        if (button == RemoteButton::Down) {
            if (s.reader.scroll_line < s.reader.max_scroll()) {
                ++s.reader.scroll_line;
                out.push_back(action::ShowPage{s.reader.scroll_line});
            }
        } else if (button == RemoteButton::C) {
            s.mode = Mode::Menu;
            out.push_back(action::ShowMenu{});
        }
        break;
    }
    return t;
}

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> lines;
    std::string cur;
    bool open = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\r' || c == '\n') {
            lines.push_back(std::move(cur));
            cur.clear();
            open = false;
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
        } else {
            cur += c;
            open = true;
        }
    }
    if (open) {
        lines.push_back(std::move(cur));
    }
    return lines;
}

namespace {

std::string printable(std::string_view line, std::size_t width)
{
    std::string out;
    for (char c : line) {
        if (out.size() == width) {
            break;
        }
        const auto u = static_cast<unsigned char>(c);
        out += c == '\t' ? ' ' : (u < 0x20 || u >= 0x7F) ? '?' : c;
    }
    return out;
}

std::string read_all(fat::FileHandle& f, std::size_t chunk)
{
    std::string text;
    while (true) {
        const auto part = f.read(chunk);
        if (part.empty()) {
            return text;
        }
        text.append(part.begin(), part.end());
    }
}

} // namespace

Player::Player(fat::Volume volume, codec::CodecHost& codec, lcd::LcdDriver& lcd, lcd::LcdGeometry geometry,
               ir::ButtonMap mapping, PlayerOptions options)
    : m_volume(std::move(volume)), m_codec(codec), m_lcd(lcd), m_geo(geometry), m_map(std::move(mapping)),
      m_opts(options)
{
    m_state.reader.rows = m_geo.rows;
}

void Player::boot()
{
    populate_files(m_state, m_volume.list_dir("/"));
    m_lcd.load_player_glyphs();
    m_lcd.print_main_menu();
}

void Player::press(RemoteButton button, bool is_repeat)
{
    Transition t = handle_button(m_state, button, is_repeat);
    m_state = std::move(t.state);
    for (const Action& a : t.actions) {
        apply(a);
    }
}

void Player::apply(const Action& a)
{
    std::visit(
        [this](const auto& act) {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, action::ShowMenu>) {
                m_lcd.print_main_menu();
            } else if constexpr (std::is_same_v<T, action::ShowMessage>) {
                m_lcd.clear();
                m_lcd.print_row(0, act.text);
                if (m_geo.rows > 1) {
                    m_lcd.print_row(1, "C:Menu");
                }
            } else if constexpr (std::is_same_v<T, action::StartTrack>) {
                start_track(act.index);
            } else if constexpr (std::is_same_v<T, action::StopPlayback>) {
                if (m_track) {
                    m_track->close();
                    m_track.reset();
                }
                m_pending.clear();
                m_codec.cancel_playback();
            } else if constexpr (std::is_same_v<T, action::SetPaused>) {
                m_codec.set_pause(act.paused);
            } else if constexpr (std::is_same_v<T, action::SetVolume>) {
                m_codec.set_volume(volume_register(act.step));
            } else if constexpr (std::is_same_v<T, action::ShowMusic>) {
                draw_music();
            } else if constexpr (std::is_same_v<T, action::OpenText>) {
                fat::FileHandle f = m_volume.open("/" + m_state.text_files.at(act.index));
                m_state.reader.line_count = split_lines(read_all(f, m_opts.text_read_size)).size();
                f.close();
            } else if constexpr (std::is_same_v<T, action::ShowPage>) {
                read_text_page();
            } else if constexpr (std::is_same_v<T, action::Halt>) {
                m_lcd.clear();
            }
        },
        a);
}

void Player::start_track(std::size_t index)
{
    if (m_track) {
        m_track->close();
        m_track.reset();
    }
    m_pending.clear();
    const std::string& name = m_state.music_files.at(index);
    m_track = m_volume.open("/" + name);
    if (m_codec.read_paused()) {
        m_codec.set_pause(false);
    }
    ++m_tracks_started;
    if (m_on_track) {
        m_on_track(name);
    }
}

void Player::draw_music()
{
    const MusicState& m = m_state.music;
    const unsigned cols = m_geo.cols;
    std::string top(1, static_cast<char>(m.playing ? lcd::kGlyphPlay : lcd::kGlyphPause));
    top += ' ';
    top += m_state.music_files.at(m.track_index);
    m_lcd.print_row(0, top);
    if (m_geo.rows > 1) {
        std::string vol = "Vol " + std::to_string(m.volume_step);
        std::string bottom(1, static_cast<char>(lcd::kGlyphPrev));
        bottom += ' ';
        bottom += vol;
        if (bottom.size() + 1 < cols) {
            bottom.resize(cols - 1, ' ');
        }
        bottom += static_cast<char>(lcd::kGlyphNext);
        m_lcd.print_row(1, bottom);
    }
}

void Player::read_text_page()
{
    const ReaderState& r = m_state.reader;
    const std::size_t want = r.scroll_line + m_geo.rows;
    fat::FileHandle f = m_volume.open("/" + m_state.text_files.at(r.file_index));

    // Read only as far as the last visible line.
    std::string text;
    while (true) {
        const auto part = f.read(m_opts.text_read_size);
        if (part.empty()) {
            break;
        }
        text.append(part.begin(), part.end());
        const std::size_t breaks = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n') +
                                                            std::count(text.begin(), text.end(), '\r'));
        if (breaks > want && text.back() != '\r') {
            break;
        }
    }
    f.close();

    const auto lines = split_lines(text);
    m_page.clear();
    for (unsigned row = 0; row < m_geo.rows; ++row) {
        const std::size_t i = r.scroll_line + row;
        m_page.push_back(i < lines.size() ? printable(lines[i], m_geo.cols) : std::string{});
        m_lcd.print_row(row, m_page.back());
    }
}

std::size_t Player::stream_chunk(PumpResult& r)
{
    if (m_pending.empty()) {
        m_pending = m_track->read(m_opts.chunk_size);
        if (m_pending.empty()) {
            // End of song: next track, wrapping at the end of the list.
            MusicState& m = m_state.music;
            m.track_index = (m.track_index + 1) % m_state.music_files.size();
            start_track(m.track_index);
            draw_music();
            return 0;
        }
    }
    r.dreq_at_chunk = m_codec.dreq();
    if (!r.dreq_at_chunk) {
        return 0;
    }
    r.chunk_attempted = true;
    if (m_codec.write_sdi(m_pending) != codec::SdiStatus::Ok) {
        return 0;
    }
    const std::size_t n = m_pending.size();
    m_streamed += n;
    m_pending.clear();
    r.chunk_bytes = n;
    return n;
}

PumpResult Player::pump(ir::IrReceiver& receiver)
{
    PumpResult r;
    if (receiver.data_received()) {
        const ir::PulseTrain train = receiver.take();
        r.ir_event = ir::decode(train, m_opts.timings, m_opts.address);
        if (const auto* f = std::get_if<ir::IrFrame>(&*r.ir_event)) {
            if (const auto b = ir::match_button(*f, m_map)) {
                m_last_button = b;
                r.button = b;
                press(*b, false);
            }
        } else if (std::holds_alternative<ir::Repeat>(*r.ir_event) && m_last_button) {
            r.button = m_last_button;
            press(*m_last_button, true);
        }
    }
    if (!m_state.halted && m_state.mode == Mode::Music && m_state.music.playing && m_track) {
        stream_chunk(r);
    }
    return r;
}

} // namespace pnp::app
