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
    SD card in SPI mode: command framing and CRCs, a simulated SDHC card that
    answers byte by byte on the bus, and the host driver (power_on, send_cmd,
    disk_initialize, disk_read, disk_write, ...) built on the SPI master.

    Only SDHC/SDXC block addressing is supported: the CMD17/CMD24 argument is
    a 512-byte block number.
*/
#pragma once

#include "pnp/block_device.hpp"
#include "pnp/spi.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnp::sd {

// Commands used by the driver and answered by the card model.
inline constexpr std::uint8_t CMD0 = 0;   // GO_IDLE_STATE
inline constexpr std::uint8_t CMD8 = 8;   // SEND_IF_COND
inline constexpr std::uint8_t CMD9 = 9;   // SEND_CSD
inline constexpr std::uint8_t CMD10 = 10; // SEND_CID
inline constexpr std::uint8_t CMD16 = 16; // SET_BLOCKLEN
inline constexpr std::uint8_t CMD17 = 17; // READ_SINGLE_BLOCK
inline constexpr std::uint8_t CMD24 = 24; // WRITE_BLOCK
inline constexpr std::uint8_t CMD55 = 55; // APP_CMD
inline constexpr std::uint8_t CMD58 = 58; // READ_OCR
inline constexpr std::uint8_t ACMD41 = 41; // SD_SEND_OP_COND, after CMD55
inline constexpr std::uint8_t ACMD51 = 51; // SEND_SCR, after CMD55

inline constexpr std::uint32_t kCmd8Argument = 0x000001AA;  // 2.7-3.6 V, check pattern 0xAA
inline constexpr std::uint32_t kAcmd41Hcs = 0x40000000;     // host supports high capacity

// R1 bits.
inline constexpr std::uint8_t R1_IDLE = 0x01;
inline constexpr std::uint8_t R1_ERASE_RESET = 0x02;
inline constexpr std::uint8_t R1_ILLEGAL_COMMAND = 0x04;
inline constexpr std::uint8_t R1_CRC_ERROR = 0x08;
inline constexpr std::uint8_t R1_ERASE_SEQ = 0x10;
inline constexpr std::uint8_t R1_ADDRESS_ERROR = 0x20;
inline constexpr std::uint8_t R1_PARAMETER_ERROR = 0x40;

inline constexpr std::uint8_t kStartBlockToken = 0xFE;

inline constexpr std::uint32_t OCR_BUSY = 0x80000000; // set when power-up is done
inline constexpr std::uint32_t OCR_CCS = 0x40000000;  // card capacity status
inline constexpr std::uint32_t OCR_VOLTAGE_WINDOW = 0x00FF8000;

// CRC7, polynomial x^7 + x^3 + 1, initial value 0. Returns the 7-bit value.
std::uint8_t crc7(std::span<const std::uint8_t> bytes) noexcept;
// CRC-16-CCITT, polynomial 0x1021, initial value 0.
std::uint16_t crc16(std::span<const std::uint8_t> bytes) noexcept;

using CommandFrame = std::array<std::uint8_t, 6>;

// 0b01 | index, argument big-endian, (crc7 << 1) | 1.
CommandFrame make_frame(std::uint8_t index, std::uint32_t argument) noexcept;
bool frame_crc_ok(const CommandFrame& frame) noexcept;

struct SdResponse {
    std::uint8_t r1 = 0xFF;
    std::optional<std::array<std::uint8_t, 4>> extra; // R3/R7 payload

    bool in_idle() const noexcept { return (r1 & R1_IDLE) != 0; }
    std::uint32_t extra_word() const noexcept;
};

// Data response token status after a block write.
enum class WriteDataResponse : std::uint8_t {
    Accepted = 0b010,
    CrcError = 0b101,
    WriteError = 0b110,
};

enum class SdCardState { Uninitialized, Idle, Ready };

struct SdCardOptions {
    unsigned acmd41_delay = 2;     // ACMD41 polls answered 0x01 before ready
    unsigned ncr_bytes = 1;        // filler bytes between command and R1
    unsigned nac_bytes = 2;        // filler bytes between R1 and a data token
    unsigned write_busy_bytes = 4; // busy (0x00) bytes after a data response
    bool crc_check_all = false;    // CMD0/CMD8 frames are always CRC-checked

    // Fault-injection toggles.
    bool corrupt_read_crc = false;
    bool read_only = false;
    bool never_ready = false;
};

// Simulated SDHC card behind a chip-select line.
class SdCardModel : public spi::SpiSlave {
public:
    explicit SdCardModel(DiskImage& image, SdCardOptions options = {});

    spi::SpiFormat format() const override { return m_format; }
    std::uint8_t exchange(std::uint8_t mosi, const spi::TransferContext& ctx) override;
    void on_select(Micros now) override;
    void on_deselect(Micros now) override;
    void on_idle_clocks(std::size_t cycles) override;

    void set_format(spi::SpiFormat f) noexcept { m_format = f; }
    SdCardOptions& options() noexcept { return m_opts; }

    SdCardState state() const noexcept { return m_state; }
    bool selected() const noexcept { return m_selected; }
    std::uint32_t ocr() const noexcept;
    const std::array<std::uint8_t, 16>& cid() const noexcept { return m_cid; }
    const std::array<std::uint8_t, 16>& csd() const noexcept { return m_csd; }
    std::uint16_t rca() const noexcept { return m_rca; }

    // Makes the next `polls` idle output bytes read 0x00 (card busy).
    void inject_busy(unsigned polls) noexcept { m_forced_busy = polls; }

    std::uint64_t crc_failures() const noexcept { return m_crc_failures; }
    std::uint64_t commands_received() const noexcept { return m_commands; }
    std::uint64_t sectors_written() const noexcept { return m_sectors_written; }
    std::uint64_t idle_clock_cycles() const noexcept { return m_idle_cycles; }

private:
    enum class RxState { Command, WaitWriteToken, WriteData };

    void execute(const CommandFrame& frame);
    void respond_r1(std::uint8_t r1);
    void queue_block(std::span<const std::uint8_t> data, bool corrupt_crc);
    void finish_write();
    std::uint8_t idle_bit() const noexcept;

    DiskImage* m_image;
    SdCardOptions m_opts;
    spi::SpiFormat m_format{};

    SdCardState m_state = SdCardState::Uninitialized;
    bool m_selected = false;
    bool m_app_cmd = false;
    unsigned m_acmd41_polls = 0;
    std::uint64_t m_idle_cycles = 0;

    std::array<std::uint8_t, 16> m_cid{};
    std::array<std::uint8_t, 16> m_csd{};
    std::array<std::uint8_t, 8> m_scr{};
    std::uint16_t m_rca = 0;
    std::uint16_t m_dsr = 0x0404;

    RxState m_rx = RxState::Command;
    CommandFrame m_cmd{};
    std::size_t m_cmd_len = 0;
    std::vector<std::uint8_t> m_write_buf;
    std::uint32_t m_write_lba = 0;

    std::deque<std::uint8_t> m_out;
    unsigned m_forced_busy = 0;

    std::uint64_t m_crc_failures = 0;
    std::uint64_t m_commands = 0;
    std::uint64_t m_sectors_written = 0;
};

// ---------------------------------------------------------------------------
// Host driver

enum class SdErrc {
    Timeout,
    InitTimeout,
    VoltageMismatch,
    NotReady,
    IllegalCommand,
    RangeError,
    CrcMismatch,
    TokenTimeout,
    CardError,
    BadDataResponse,
};

class SdError : public std::runtime_error {
public:
    SdError(SdErrc code, const std::string& what) : std::runtime_error(what), m_code(code) {}
    SdErrc code() const noexcept { return m_code; }

private:
    SdErrc m_code;
};

// disk_status flags.
inline constexpr std::uint8_t STA_NOINIT = 0x01;
inline constexpr std::uint8_t STA_NODISK = 0x02;
inline constexpr std::uint8_t STA_PROTECT = 0x04;

struct SdHostOptions {
    std::uint64_t init_clock_hz = 400'000;
    std::uint64_t run_clock_hz = 12'000'000;
    spi::SpiMode mode{1, 0};
    unsigned power_on_bytes = 10;     // 80 clocks with CS high
    unsigned ncr_poll_bytes = 8;      // response window N_cr
    unsigned acmd41_retry_cap = 1000;
    Micros acmd41_retry_gap = 1000;
    unsigned ready_timeout_ticks = 500; // disk_timeproc ticks
    unsigned token_timeout_ticks = 200;
    unsigned max_wait_polls = 20000;  // hard cap when no tick source runs

    bool corrupt_write_crc = false;   // fault hook: send a wrong data CRC
};

struct CommandTrace {
    std::uint8_t index;
    bool app;
    std::uint32_t argument;
    std::uint8_t crc_byte; // last frame byte, (crc7 << 1) | 1
    std::uint8_t r1;

    bool operator==(const CommandTrace&) const = default;
};

class SdHost {
public:
    SdHost(spi::SpiBus& bus, spi::ChipSelect cs, SdHostOptions options = {});

    // Configures the SPI master at the init clock and sends the wake-up
    // clocks with CS high.
    void power_on();
    void select();
    void deselect();

    // Polls until the card releases DO (reads 0xFF). Uses the timer armed
    // by start_ready_timer(); a spent timer fails without polling.
    bool card_ready();
    void start_ready_timer(unsigned ticks) noexcept { m_timer2 = ticks; }
    unsigned last_ready_polls() const noexcept { return m_last_ready_polls; }

    SdResponse send_cmd(std::uint8_t index, std::uint32_t argument);
    SdResponse send_acmd(std::uint8_t index, std::uint32_t argument);
    SdResponse receive_response(std::uint8_t index);

    std::uint8_t disk_initialize();
    std::uint8_t disk_status() const noexcept { return m_status; }
    std::vector<std::uint8_t> disk_read(std::uint32_t lba, std::uint32_t count);
    WriteDataResponse disk_write(std::uint32_t lba, std::span<const std::uint8_t, kSectorSize> data);
    // Tick source for the driver's timeout counters.
    void disk_timeproc() noexcept;

    std::vector<std::uint8_t> read_register_block(std::uint8_t index, std::size_t length, bool app = false);
    std::uint64_t card_sector_count();

    const std::vector<CommandTrace>& trace() const noexcept { return m_trace; }
    void clear_trace() noexcept { m_trace.clear(); }
    SdHostOptions& options() noexcept { return m_opts; }
    const spi::SpiConfig& spi_config() const noexcept { return m_spi; }

private:
    void apply_clock();
    void rcvr_datablock(std::span<std::uint8_t> out);
    SdResponse command(std::uint8_t index, std::uint32_t argument, bool app);

    spi::SpiBus& m_bus;
    spi::ChipSelect m_cs;
    SdHostOptions m_opts;
    spi::SpiConfig m_spi;
    std::uint8_t m_status = STA_NOINIT;
    unsigned m_timer1 = 0;
    unsigned m_timer2 = 0;
    unsigned m_last_ready_polls = 0;
    std::optional<std::uint64_t> m_sector_count;
    std::vector<CommandTrace> m_trace;
};

// Block device over the SD host driver, one CMD17 per sector.
class SdBlockDevice : public BlockDevice {
public:
    explicit SdBlockDevice(SdHost& host) : m_host(&host) {}

    Sector read_sector(std::uint32_t lba) override;
    std::uint64_t sector_count() const override { return m_host->card_sector_count(); }

private:
    SdHost* m_host;
};

} // namespace pnp::sd
