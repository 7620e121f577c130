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
    VS1063 register machine. SCI (register access) and SDI (stream data) sit
    behind separate chip selects. The stream FIFO is drained at a configured
    byte rate instead of being decoded; DREQ is the only backpressure signal.

    CodecHost is the MCU side: WriteSci/ReadSci/WriteSdi and the hardware and
    software init sequences.
*/
#pragma once

#include "pnp/spi.hpp"

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
#include <vector>

namespace pnp::codec {

// SCI register addresses.
namespace reg {
inline constexpr std::uint8_t MODE = 0x0;
inline constexpr std::uint8_t STATUS = 0x1;
inline constexpr std::uint8_t BASS = 0x2;
inline constexpr std::uint8_t CLOCKF = 0x3;
inline constexpr std::uint8_t DECODE_TIME = 0x4;
inline constexpr std::uint8_t AUDATA = 0x5;
inline constexpr std::uint8_t WRAM = 0x6;
inline constexpr std::uint8_t WRAMADDR = 0x7;
inline constexpr std::uint8_t HDAT0 = 0x8;
inline constexpr std::uint8_t HDAT1 = 0x9;
inline constexpr std::uint8_t AIADDR = 0xA;
inline constexpr std::uint8_t VOL = 0xB;
inline constexpr std::uint8_t AICTRL0 = 0xC;
inline constexpr std::uint8_t AICTRL1 = 0xD;
inline constexpr std::uint8_t AICTRL2 = 0xE;
inline constexpr std::uint8_t AICTRL3 = 0xF;
} // namespace reg

const char* register_name(std::uint8_t addr) noexcept;
std::optional<std::uint8_t> parse_register(std::string_view name);

inline constexpr std::uint16_t SM_RESET = 0x0004;
inline constexpr std::uint16_t SM_CANCEL = 0x0008;
inline constexpr std::uint16_t SM_SDINEW = 0x0800;
inline constexpr std::uint16_t SM_SDISHARE = 0x0400;
// Read-only bit this model sets in STATUS while DREQ could go high.
inline constexpr std::uint16_t STATUS_READY = 0x8000;

inline constexpr std::uint8_t kSciWrite = 0x02;
inline constexpr std::uint8_t kSciRead = 0x03;
inline constexpr std::size_t kSdiChunk = 32;

// X-memory word holding playMode; bit 0 pauses decoding.
inline constexpr std::uint16_t kPlayModeAddr = 0x1E09;
inline constexpr std::uint16_t kPlayModePause = 0x0001;

struct CodecConfig {
    std::size_t fifo_capacity = 2048;
    std::uint64_t max_data_clock_hz = 120'000;
    Micros startup_delay_us = 1800;
    Micros soft_reset_delay_us = 100;
    Micros sci_settle_us = 5;
    std::uint64_t bitrate_bps = 64'000;
    spi::SpiFormat format{}; // Mode 2, MSB first
    std::array<std::uint16_t, 16> reset_values{};

    CodecConfig();
    // key=value lines: fifo_capacity, max_data_clock_hz, startup_delay_us,
    // soft_reset_delay_us, sci_settle_us, bitrate_bps, spi_mode,
    // reg.<NAME>=<value>.
    static CodecConfig parse(std::istream& in);
};

class CodecConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CodecModel {
public:
    explicit CodecModel(CodecConfig config = {});

    spi::SpiSlave& command_port() noexcept { return m_sci; }
    spi::SpiSlave& data_port() noexcept { return m_sdi; }

    // Drains the FIFO up to `now`. Every observer calls this first, so the
    // periodic tick only bounds how stale the state may get.
    void sync(Micros now);
    void codec_tick(Micros elapsed) { sync(m_last_sync + elapsed); }

    // Pins.
    void set_reset(bool asserted, Micros now);
    bool dreq(Micros now);

    std::uint16_t peek(std::uint8_t addr) const;
    std::uint16_t wram(std::uint16_t addr) const;
    bool paused() const;

    std::size_t fifo_size() const noexcept { return m_fifo.size(); }
    std::size_t fifo_free() const noexcept { return m_config.fifo_capacity - m_fifo.size(); }
    std::uint64_t accepted_bytes() const noexcept { return m_accepted; }
    std::uint64_t consumed_bytes() const noexcept { return m_consumed; }
    std::uint64_t discarded_bytes() const noexcept { return m_discarded; }
    std::uint64_t dropped_bytes() const noexcept { return m_dropped; }
    std::uint64_t sci_writes() const noexcept { return m_sci_writes; }

    // Set while the most recent SDI byte arrived above max_data_clock_hz.
    bool fast_mode() const noexcept { return m_fast_mode; }
    // Bytes ever clocked into SDI above the limit.
    std::uint64_t fast_mode_bytes() const noexcept { return m_fast_bytes; }

    // SDI chip-select windows: longest burst, bursts over 32 bytes, and
    // bursts that started while DREQ was low.
    std::size_t sdi_max_burst() const noexcept { return m_max_burst; }
    std::uint64_t sdi_oversize_bursts() const noexcept { return m_oversize_bursts; }
    std::uint64_t sdi_bursts_without_dreq() const noexcept { return m_bursts_without_dreq; }

    const std::vector<std::uint16_t>& patch_words() const noexcept { return m_patch; }
    std::uint16_t patch_checksum() const noexcept;

    void set_bitrate(std::uint64_t bps);
    std::uint64_t bitrate() const noexcept { return m_bitrate; }
    const CodecConfig& config() const noexcept { return m_config; }
    void set_format(spi::SpiFormat f) noexcept { m_config.format = f; }

    // Fault hook: DREQ never rises.
    void set_dreq_stuck_low(bool on) noexcept { m_dreq_stuck = on; }

private:
    class SciPort : public spi::SpiSlave {
    public:
        explicit SciPort(CodecModel& m) : m_model(m) {}
        spi::SpiFormat format() const override { return m_model.m_config.format; }
        std::uint8_t exchange(std::uint8_t mosi, const spi::TransferContext& ctx) override;
        void on_select(Micros now) override;
        void on_deselect(Micros now) override;

        unsigned index = 0;
        std::uint8_t opcode = 0;
        std::uint8_t addr = 0;
        std::uint16_t value = 0;
        std::uint16_t read_value = 0;

    private:
        CodecModel& m_model;
    };

    class SdiPort : public spi::SpiSlave {
    public:
        explicit SdiPort(CodecModel& m) : m_model(m) {}
        spi::SpiFormat format() const override { return m_model.m_config.format; }
        std::uint8_t exchange(std::uint8_t mosi, const spi::TransferContext& ctx) override;
        void on_select(Micros now) override;

        std::size_t burst = 0;
        bool burst_dreq = false;

    private:
        CodecModel& m_model;
    };

    void hard_reset();
    bool running(Micros now) const noexcept;
    std::uint16_t sci_read(std::uint8_t addr, Micros now);
    void sci_write(std::uint8_t addr, std::uint16_t value, Micros now);

    CodecConfig m_config;
    SciPort m_sci{*this};
    SdiPort m_sdi{*this};

    std::array<std::uint16_t, 16> m_regs{};
    std::map<std::uint16_t, std::uint16_t> m_wram;
    std::uint16_t m_wram_ptr = 0;
    std::vector<std::uint16_t> m_patch;

    std::deque<std::uint8_t> m_fifo;
    bool m_in_reset = false;
    Micros m_ready_at = 0;
    Micros m_settle_until = 0;
    Micros m_last_sync = 0;
    std::uint64_t m_drain_carry = 0;
    std::uint64_t m_bitrate = 0;
    std::uint64_t m_decode_base_bytes = 0;

    std::uint64_t m_accepted = 0;
    std::uint64_t m_consumed = 0;
    std::uint64_t m_discarded = 0;
    std::uint64_t m_dropped = 0;
    std::uint64_t m_sci_writes = 0;
    bool m_fast_mode = false;
    std::uint64_t m_fast_bytes = 0;
    bool m_dreq_stuck = false;
    std::size_t m_max_burst = 0;
    std::uint64_t m_oversize_bursts = 0;
    std::uint64_t m_bursts_without_dreq = 0;
};

// ---------------------------------------------------------------------------
// Host driver

enum class CodecErrc { BusyError, DreqTimeout, SanityCheckFailed, PatchVerifyFailed };

class CodecError : public std::runtime_error {
public:
    CodecError(CodecErrc code, const std::string& what) : std::runtime_error(what), m_code(code) {}
    CodecErrc code() const noexcept { return m_code; }

private:
    CodecErrc m_code;
};

struct CodecPins {
    spi::ChipSelect cs_command{1};
    spi::ChipSelect cs_data{2};
};

enum class SdiStatus { Ok = 0, ChunkTooLarge = -1, Backpressure = -2 };

struct CodecHostOptions {
    std::uint64_t sci_clock_hz = 2'000'000;
    std::uint64_t sdi_clock_hz = 120'000;
    spi::SpiMode mode{1, 0};
    bool msb_first = true;
    Micros reset_pulse_us = 10;
    Micros dreq_timeout_us = 100'000;
    Micros busy_timeout_us = 50'000;
    std::uint16_t sanity_a = 0xABAD; // written to AICTRL1
    std::uint16_t sanity_b = 0x7E57; // written to AICTRL2
    std::uint16_t clockf = 0x8800;
    std::uint16_t volume = 0x4040;
    std::uint16_t patch_address = 0x8050;
    std::vector<std::uint16_t> patch;
};

// Stand-in for the vendor patches package. Only length and checksum matter.
std::vector<std::uint16_t> default_patch_blob();
std::uint16_t patch_checksum(const std::vector<std::uint16_t>& words) noexcept;

class CodecHost {
public:
    // The model reference is the GPIO wiring: reset output and DREQ input.
    CodecHost(spi::SpiBus& bus, CodecModel& pins, CodecPins lines = {}, CodecHostOptions options = {});

    // Spiinit: SCI clock, Mode 2, MSB first.
    void spi_init();
    void vs_test_init_hardware();
    void vs_test_init_software();

    void write_sci(std::uint8_t addr, std::uint16_t value);
    std::uint16_t read_sci(std::uint8_t addr);

    // WriteSdi: at most 32 bytes, only while DREQ is high.
    SdiStatus write_sdi(std::span<const std::uint8_t> bytes);
    void write_spi_byte_sdi(std::uint8_t byte);

    void set_volume(std::uint16_t vol) { write_sci(reg::VOL, vol); }
    void set_pause(bool paused);
    bool read_paused();
    // Unpauses and drops whatever the stream fifo still holds.
    void cancel_playback();
    bool dreq();

    CodecHostOptions& options() noexcept { return m_opts; }
    const CodecPins& lines() const noexcept { return m_lines; }
    std::uint64_t sdi_bytes_sent() const noexcept { return m_sdi_bytes; }

private:
    void use_clock(std::uint64_t hz);
    void wait_dreq(Micros timeout, CodecErrc err, const char* what);

    spi::SpiBus& m_bus;
    CodecModel& m_pins;
    CodecPins m_lines;
    CodecHostOptions m_opts;
    std::uint64_t m_sdi_bytes = 0;
};

} // namespace pnp::codec
