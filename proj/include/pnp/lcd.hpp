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
    HD44780-compatible character LCD on an 8-bit parallel bus, and the
    firmware driver that talks to it.

    DDRAM uses the controller's two-line map: line 0 at 0x00-0x27, line 1 at
    0x40-0x67. Rows 2 and 3 of a four-row module continue lines 0 and 1.
*/
#pragma once

#include "pnp/simcore.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pnp::lcd {

struct LcdGeometry {
    unsigned cols = 16;
    unsigned rows = 2;

    bool operator==(const LcdGeometry&) const = default;
};

// Instruction bits.
inline constexpr std::uint8_t LCD_CLEAR = 0x01;
inline constexpr std::uint8_t LCD_HOME = 0x02;
inline constexpr std::uint8_t LCD_ENTRY_MODE = 0x04;
inline constexpr std::uint8_t LCD_ENTRY_INC = 0x02;
inline constexpr std::uint8_t LCD_ENTRY_SHIFT = 0x01;
inline constexpr std::uint8_t LCD_DISPLAY_CTRL = 0x08;
inline constexpr std::uint8_t LCD_DISPLAY_ON = 0x04;
inline constexpr std::uint8_t LCD_CURSOR_ON = 0x02;
inline constexpr std::uint8_t LCD_BLINK_ON = 0x01;
inline constexpr std::uint8_t LCD_SHIFT = 0x10;
inline constexpr std::uint8_t LCD_SHIFT_DISPLAY = 0x08;
inline constexpr std::uint8_t LCD_SHIFT_RIGHT = 0x04;
inline constexpr std::uint8_t LCD_FUNCTION_SET = 0x20;
inline constexpr std::uint8_t LCD_8BIT = 0x10;
inline constexpr std::uint8_t LCD_2LINE = 0x08;
inline constexpr std::uint8_t LCD_SET_CGRAM = 0x40;
inline constexpr std::uint8_t LCD_SET_DDRAM = 0x80;

inline constexpr Micros kLcdExecUs = 37;
inline constexpr Micros kLcdClearUs = 1520;

class LcdBusy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LcdError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using GlyphRows = std::array<std::uint8_t, 8>;

class LcdModel {
public:
    explicit LcdModel(LcdGeometry geometry = {});

    // Bus cycles. Writes and data reads while busy throw LcdBusy.
    void command(std::uint8_t cmd, Micros now);
    void data(std::uint8_t byte, Micros now);
    std::uint8_t read_data(Micros now);
    // RS=0 read: busy flag in bit 7, address counter in bits 6..0.
    std::uint8_t read_status(Micros now) const noexcept;
    bool busy(Micros now) const noexcept { return now < m_busy_until; }

    // Text grid: one string per row, custom glyph codes as \g0..\g7.
    std::vector<std::string> render() const;
    std::string render_text() const;
    GlyphRows glyph(unsigned slot) const;
    // Character code displayed at a grid cell.
    std::uint8_t cell(unsigned row, unsigned col) const;

    const LcdGeometry& geometry() const noexcept { return m_geo; }
    std::uint8_t address_counter() const noexcept { return m_ac; }
    bool cgram_selected() const noexcept { return m_cgram_mode; }
    bool display_on() const noexcept { return m_display_on; }
    std::uint8_t ddram_at(std::uint8_t addr) const;
    // DDRAM address of a grid cell, ignoring display shift.
    std::uint8_t address_of(unsigned row, unsigned col) const;
    // Grid position of a DDRAM address, if it is visible without shift.
    std::optional<std::pair<unsigned, unsigned>> position_of(std::uint8_t addr) const;
    std::uint64_t writes() const noexcept { return m_writes; }

private:
    void check_ready(Micros now, const char* what) const;
    std::size_t ddram_index(std::uint8_t addr) const;
    void step_ac();

    LcdGeometry m_geo;
    std::array<std::uint8_t, 80> m_ddram{};
    std::array<std::uint8_t, 64> m_cgram{};
    std::uint8_t m_ac = 0;
    bool m_cgram_mode = false;
    bool m_increment = true;
    bool m_entry_shift = false;
    bool m_display_on = false;
    bool m_cursor_on = false;
    bool m_blink_on = false;
    int m_shift = 0;
    Micros m_busy_until = 0;
    std::uint64_t m_writes = 0;
};

// Glyph slots used by the player screens.
inline constexpr std::uint8_t kGlyphPlay = 0;
inline constexpr std::uint8_t kGlyphPause = 1;
inline constexpr std::uint8_t kGlyphNext = 2;
inline constexpr std::uint8_t kGlyphPrev = 3;

extern const GlyphRows kPlayGlyph;
extern const GlyphRows kPauseGlyph;
extern const GlyphRows kNextGlyph;
extern const GlyphRows kPrevGlyph;

class LcdDriver {
public:
    LcdDriver(LcdModel& lcd, Scheduler& scheduler) : m_lcd(lcd), m_sched(scheduler) {}

    // 8-bit, two-line, display on, clear, increment.
    void init();

    void command(std::uint8_t cmd);
    void data(std::uint8_t byte);
    std::uint8_t read_data();
    void wait_ready();

    void clear();
    void home();
    void go_to(unsigned row, unsigned col);
    void set_cgram_address(std::uint8_t addr);
    void display_char(std::uint8_t c);
    // Writes from the cursor to the end of the row; the rest is dropped.
    void display_string(std::string_view text);
    void define_glyph(unsigned slot, const GlyphRows& rows);
    void load_player_glyphs();
    void print_main_menu();
    // Writes `text` padded or cut to exactly one row.
    void print_row(unsigned row, std::string_view text);

    // Test hook: skip busy polling and write immediately.
    void set_polling(bool on) noexcept { m_polling = on; }

private:
    LcdModel& m_lcd;
    Scheduler& m_sched;
    bool m_polling = true;
};

} // namespace pnp::lcd
