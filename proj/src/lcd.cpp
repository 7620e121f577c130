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
#include "pnp/lcd.hpp"

namespace pnp::lcd {

const GlyphRows kPlayGlyph = {0x10, 0x18, 0x1C, 0x1E, 0x1C, 0x18, 0x10, 0x00};
const GlyphRows kPauseGlyph = {0x1B, 0x1B, 0x1B, 0x1B, 0x1B, 0x1B, 0x1B, 0x00};
const GlyphRows kNextGlyph = {0x11, 0x19, 0x1D, 0x1F, 0x1D, 0x19, 0x11, 0x00};
const GlyphRows kPrevGlyph = {0x11, 0x13, 0x17, 0x1F, 0x17, 0x13, 0x11, 0x00};

namespace {

constexpr unsigned kLineLen = 40; // per line in two-line mode

} // namespace

LcdModel::LcdModel(LcdGeometry geometry) : m_geo(geometry)
{
    if (m_geo.cols == 0 || m_geo.rows == 0 || m_geo.rows > 4 || m_geo.cols * ((m_geo.rows + 1) / 2) > kLineLen) {
        throw LcdError("unsupported LCD geometry " + std::to_string(m_geo.cols) + "x" + std::to_string(m_geo.rows));
    }
    m_ddram.fill(0x20);
}

std::size_t LcdModel::ddram_index(std::uint8_t addr) const
{
    if (m_geo.rows == 1) {
        if (addr < 80) {
            return addr;
        }
    } else if (addr < kLineLen) {
        return addr;
    } else if (addr >= 0x40 && addr < 0x40 + kLineLen) {
        return kLineLen + (addr - 0x40);
    }
    throw LcdError("DDRAM address " + std::to_string(addr) + " does not exist");
}

std::uint8_t LcdModel::ddram_at(std::uint8_t addr) const
{
    return m_ddram[ddram_index(addr)];
}

void LcdModel::check_ready(Micros now, const char* what) const
{
    if (busy(now)) {
        throw LcdBusy(std::string(what) + " while the busy flag is set");
    }
}

void LcdModel::step_ac()
{
    if (m_cgram_mode) {
        m_ac = static_cast<std::uint8_t>((m_ac + (m_increment ? 1 : -1)) & 0x3F);
        return;
    }
    if (m_geo.rows == 1) {
        m_ac = static_cast<std::uint8_t>(m_increment ? (m_ac + 1) % 80 : (m_ac + 79) % 80);
        return;
    }
    if (m_increment) {
        m_ac = m_ac == 0x27 ? 0x40 : m_ac == 0x67 ? 0x00 : static_cast<std::uint8_t>(m_ac + 1);
    } else {
        m_ac = m_ac == 0x40 ? 0x27 : m_ac == 0x00 ? 0x67 : static_cast<std::uint8_t>(m_ac - 1);
    }
}

void LcdModel::command(std::uint8_t cmd, Micros now)
{
    check_ready(now, "command");
    ++m_writes;
    Micros exec = kLcdExecUs;

    if (cmd & LCD_SET_DDRAM) {
        const auto addr = static_cast<std::uint8_t>(cmd & 0x7F);
        ddram_index(addr); // validates
        m_ac = addr;
        m_cgram_mode = false;
    } else if (cmd & LCD_SET_CGRAM) {
        m_ac = static_cast<std::uint8_t>(cmd & 0x3F);
        m_cgram_mode = true;
    } else if (cmd & LCD_FUNCTION_SET) {
        if (!(cmd & LCD_8BIT)) {
            throw LcdError("4-bit interface is not modeled");
        }
    } else if (cmd & LCD_SHIFT) {
        const bool right = cmd & LCD_SHIFT_RIGHT;
        if (cmd & LCD_SHIFT_DISPLAY) {
            m_shift += right ? -1 : 1;
        } else {
            const bool saved = m_increment;
            m_increment = right;
            step_ac();
            m_increment = saved;
        }
    } else if (cmd & LCD_DISPLAY_CTRL) {
        m_display_on = cmd & LCD_DISPLAY_ON;
        m_cursor_on = cmd & LCD_CURSOR_ON;
        m_blink_on = cmd & LCD_BLINK_ON;
    } else if (cmd & LCD_ENTRY_MODE) {
        m_increment = cmd & LCD_ENTRY_INC;
        m_entry_shift = cmd & LCD_ENTRY_SHIFT;
    } else if (cmd & LCD_HOME) {
        m_ac = 0;
        m_cgram_mode = false;
        m_shift = 0;
        exec = kLcdClearUs;
    } else if (cmd & LCD_CLEAR) {
        m_ddram.fill(0x20);
        m_ac = 0;
        m_cgram_mode = false;
        m_shift = 0;
        m_increment = true;
        exec = kLcdClearUs;
    }
    m_busy_until = now + exec;
}

void LcdModel::data(std::uint8_t byte, Micros now)
{
    check_ready(now, "data write");
    ++m_writes;
    if (m_cgram_mode) {
        m_cgram[m_ac] = static_cast<std::uint8_t>(byte & 0x1F);
    } else {
        m_ddram[ddram_index(m_ac)] = byte;
        if (m_entry_shift) {
            m_shift += m_increment ? 1 : -1;
        }
    }
    step_ac();
    m_busy_until = now + kLcdExecUs;
}

std::uint8_t LcdModel::read_data(Micros now)
{
    check_ready(now, "data read");
    const std::uint8_t v = m_cgram_mode ? m_cgram[m_ac] : m_ddram[ddram_index(m_ac)];
    step_ac();
    m_busy_until = now + kLcdExecUs;
    return v;
}

std::uint8_t LcdModel::read_status(Micros now) const noexcept
{
    return static_cast<std::uint8_t>((busy(now) ? 0x80 : 0x00) | (m_ac & 0x7F));
}

std::uint8_t LcdModel::address_of(unsigned row, unsigned col) const
{
    if (row >= m_geo.rows || col >= m_geo.cols) {
        throw LcdError("cell (" + std::to_string(row) + "," + std::to_string(col) + ") is off the display");
    }
    if (m_geo.rows == 1) {
        return static_cast<std::uint8_t>(col);
    }
    return static_cast<std::uint8_t>((row % 2 ? 0x40 : 0x00) + (row / 2) * m_geo.cols + col);
}

std::optional<std::pair<unsigned, unsigned>> LcdModel::position_of(std::uint8_t addr) const
{
    for (unsigned r = 0; r < m_geo.rows; ++r) {
        const std::uint8_t start = address_of(r, 0);
        if (addr >= start && addr < start + m_geo.cols) {
            return std::pair{r, static_cast<unsigned>(addr - start)};
        }
    }
    return std::nullopt;
}

std::uint8_t LcdModel::cell(unsigned row, unsigned col) const
{
    if (row >= m_geo.rows || col >= m_geo.cols) {
        throw LcdError("cell off the display");
    }
    if (m_geo.rows == 1) {
        const int off = ((static_cast<int>(col) + m_shift) % 80 + 80) % 80;
        return m_ddram[static_cast<std::size_t>(off)];
    }
    const int base = static_cast<int>((row / 2) * m_geo.cols + col);
    const int off = ((base + m_shift) % static_cast<int>(kLineLen) + static_cast<int>(kLineLen)) %
                    static_cast<int>(kLineLen);
    return m_ddram[(row % 2) * kLineLen + static_cast<std::size_t>(off)];
}

GlyphRows LcdModel::glyph(unsigned slot) const
{
    if (slot > 7) {
        throw LcdError("glyph slot " + std::to_string(slot) + " out of range 0..7");
    }
    GlyphRows g;
    for (unsigned i = 0; i < 8; ++i) {
        g[i] = m_cgram[slot * 8 + i];
    }
    return g;
}

std::vector<std::string> LcdModel::render() const
{
    std::vector<std::string> rows;
    for (unsigned r = 0; r < m_geo.rows; ++r) {
        std::string line;
        for (unsigned c = 0; c < m_geo.cols; ++c) {
            const std::uint8_t ch = m_display_on ? cell(r, c) : 0x20;
            if (ch < 0x10) {
                line += "\\g";
                line += static_cast<char>('0' + (ch & 7)); // 0x08-0x0F alias 0x00-0x07
            } else if (ch >= 0x20 && ch < 0x7F) {
                line += static_cast<char>(ch);
            } else {
                line += '?';
            }
        }
        rows.push_back(std::move(line));
    }
    return rows;
}

std::string LcdModel::render_text() const
{
    std::string out;
    for (const auto& row : render()) {
        out += row;
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

void LcdDriver::wait_ready()
{
    if (!m_polling) {
        return;
    }
    while (m_lcd.read_status(m_sched.now()) & 0x80) {
        m_sched.advance_by(1);
    }
}

void LcdDriver::command(std::uint8_t cmd)
{
    wait_ready();
    m_lcd.command(cmd, m_sched.now());
}

void LcdDriver::data(std::uint8_t byte)
{
    wait_ready();
    m_lcd.data(byte, m_sched.now());
}

std::uint8_t LcdDriver::read_data()
{
    wait_ready();
    return m_lcd.read_data(m_sched.now());
}

void LcdDriver::init()
{
    const std::uint8_t lines = m_lcd.geometry().rows > 1 ? LCD_2LINE : 0;
    command(LCD_FUNCTION_SET | LCD_8BIT | lines);
    command(LCD_DISPLAY_CTRL | LCD_DISPLAY_ON);
    command(LCD_CLEAR);
    command(LCD_ENTRY_MODE | LCD_ENTRY_INC);
}

void LcdDriver::clear()
{
    command(LCD_CLEAR);
}

void LcdDriver::home()
{
    command(LCD_HOME);
}

void LcdDriver::go_to(unsigned row, unsigned col)
{
    command(static_cast<std::uint8_t>(LCD_SET_DDRAM | m_lcd.address_of(row, col)));
}

void LcdDriver::set_cgram_address(std::uint8_t addr)
{
    command(static_cast<std::uint8_t>(LCD_SET_CGRAM | (addr & 0x3F)));
}

void LcdDriver::display_char(std::uint8_t c)
{
    data(c);
}

void LcdDriver::display_string(std::string_view text)
{
    wait_ready();
    const auto pos = m_lcd.cgram_selected() ? std::nullopt : m_lcd.position_of(m_lcd.address_counter());
    if (!pos) {
        return;
    }
    const std::size_t room = m_lcd.geometry().cols - pos->second;
    for (std::size_t i = 0; i < text.size() && i < room; ++i) {
        data(static_cast<std::uint8_t>(text[i]));
    }
}

void LcdDriver::define_glyph(unsigned slot, const GlyphRows& rows)
{
    if (slot > 7) {
        throw LcdError("glyph slot " + std::to_string(slot) + " out of range 0..7");
    }
    wait_ready();
    const bool was_cgram = m_lcd.cgram_selected();
    const std::uint8_t ac = m_lcd.address_counter();
    set_cgram_address(static_cast<std::uint8_t>(slot * 8));
    for (std::uint8_t r : rows) {
        data(static_cast<std::uint8_t>(r & 0x1F));
    }
    if (!was_cgram) {
        command(static_cast<std::uint8_t>(LCD_SET_DDRAM | ac));
    }
}

void LcdDriver::load_player_glyphs()
{
    define_glyph(kGlyphPlay, kPlayGlyph);
    define_glyph(kGlyphPause, kPauseGlyph);
    define_glyph(kGlyphNext, kNextGlyph);
    define_glyph(kGlyphPrev, kPrevGlyph);
}

void LcdDriver::print_row(unsigned row, std::string_view text)
{
    go_to(row, 0);
    const unsigned cols = m_lcd.geometry().cols;
    for (unsigned c = 0; c < cols; ++c) {
        data(c < text.size() ? static_cast<std::uint8_t>(text[c]) : ' ');
    }
}

void LcdDriver::print_main_menu()
{
    clear();
    print_row(0, "MENU");
    if (m_lcd.geometry().rows > 1) {
        print_row(1, "A:Music B:Text");
    }
}

} // namespace pnp::lcd
