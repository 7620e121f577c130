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
    Full-duplex SPI bus in 3-pin master mode, modeled at byte granularity.

    The master side mirrors the eUSCI_B register model the firmware drives:
    a byte written to TXBUF is shifted out while the slave's byte is shifted
    in, and RXBUF/rx_ready only change once all 8 bits have been exchanged.
    Transfers consume 8 / f_UCLK of virtual time, with f_UCLK = f_BRCLK / UCBRx.

    Mode numbering (ckph, ckpl): 0 = (0,0), 1 = (0,1), 2 = (1,0), 3 = (1,1).
*/
#pragma once

#include "pnp/simcore.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnp::spi {

struct SpiMode {
    std::uint8_t ckph = 0;
    std::uint8_t ckpl = 0;

    static SpiMode from_number(int mode);
    int number() const noexcept { return ckph * 2 + ckpl; }
    bool operator==(const SpiMode&) const = default;
};

// What a device samples with: clock mode plus bit order.
struct SpiFormat {
    SpiMode mode{1, 0};
    bool msb_first = true;

    bool operator==(const SpiFormat&) const = default;
};

struct SpiConfig {
    SpiMode mode{1, 0};
    bool msb_first = true;
    std::uint32_t divisor = 1;               // UCBRx
    std::uint64_t source_clock_hz = 48'000'000; // f_BRCLK

    SpiFormat format() const noexcept { return {mode, msb_first}; }
    void validate() const;
    bool operator==(const SpiConfig&) const = default;
};

struct Bitrate {
    std::uint64_t hz;
    std::uint64_t remainder; // f_BRCLK mod UCBRx
};

// f_UCLK = f_BRCLK / UCBRx, integer division with the remainder reported.
Bitrate effective_bitrate(const SpiConfig& config);

// Smallest divisor whose bit clock does not exceed `target_hz`.
std::uint32_t divisor_for(std::uint64_t source_clock_hz, std::uint64_t target_hz);

// Byte as seen by the receiving end when sender and receiver disagree on the
// clock mode: a phase mismatch rotates the byte by one bit (left when the
// master samples late), a polarity mismatch inverts the first sampled bit.
// Bit-order disagreement reverses the byte. Identity when formats match.
std::uint8_t skew_byte(std::uint8_t byte, const SpiFormat& master, const SpiFormat& slave) noexcept;

struct TransferContext {
    Micros now;               // virtual time at the end of the byte
    std::uint64_t bitrate_hz; // bit clock the byte was shifted at
};

class SpiSlave {
public:
    virtual ~SpiSlave() = default;

    virtual SpiFormat format() const = 0;
    // One 8-bit exchange: receives `mosi`, returns the byte it shifts out.
    virtual std::uint8_t exchange(std::uint8_t mosi, const TransferContext& ctx) = 0;
    virtual void on_select(Micros /*now*/) {}
    virtual void on_deselect(Micros /*now*/) {}
    // Clock cycles delivered while this device's chip select is high.
    virtual void on_idle_clocks(std::size_t /*cycles*/) {}
};

struct ChipSelect {
    std::uint8_t id = 0;

    auto operator<=>(const ChipSelect&) const = default;
};

enum class SpiErrc { NoSlaveSelected, UnknownChipSelect, BusContention, EmptyReceive, BadConfig };

class SpiError : public std::runtime_error {
public:
    SpiError(SpiErrc code, const std::string& what) : std::runtime_error(what), m_code(code) {}
    SpiErrc code() const noexcept { return m_code; }

private:
    SpiErrc m_code;
};

struct BusTraceEntry {
    Micros t;
    ChipSelect cs;
    std::uint8_t mosi;
    std::uint8_t miso;
    int master_mode;
    int slave_mode;
};

// `t=<us> cs=<id> mosi=<hex> miso=<hex> mode=<m>/<s>`
std::string format_trace(const BusTraceEntry& e);

class SpiBus {
public:
    SpiBus(Scheduler& scheduler, SpiConfig master);

    Scheduler& scheduler() noexcept { return m_scheduler; }

    void configure(const SpiConfig& config);
    const SpiConfig& config() const noexcept { return m_config; }
    Bitrate bitrate() const { return effective_bitrate(m_config); }

    // Wires a chip-select line to a slave. One slave per line.
    void add_line(ChipSelect cs, SpiSlave& slave);
    bool has_line(ChipSelect cs) const { return m_lines.count(cs) != 0; }

    void select(ChipSelect cs);
    void deselect(ChipSelect cs);
    bool is_selected(ChipSelect cs) const;

    // Register-level master interface.
    void write_tx(ChipSelect cs, std::uint8_t byte);
    bool tx_ready() const noexcept { return m_tx_ready; }
    bool rx_ready() const noexcept { return m_rx_ready; }
    std::uint8_t read_rx();

    // Polling driver helpers: Transmit, rcvr_spi, rcvr_spi_multi.
    std::uint8_t transfer(ChipSelect cs, std::uint8_t out);
    void transmit(ChipSelect cs, std::span<const std::uint8_t> bytes);
    std::uint8_t receive(ChipSelect cs) { return transfer(cs, 0xFF); }
    std::vector<std::uint8_t> receive_multi(ChipSelect cs, std::size_t count);

    // Clocks `bytes` x 8 cycles with every chip select high.
    void idle_clocks(std::size_t bytes);

    // Lets virtual time pass without clocking the bus.
    void delay(Micros us);

    void set_trace(std::function<void(const BusTraceEntry&)> sink) { m_trace = std::move(sink); }

    std::uint64_t bytes_transferred() const noexcept { return m_bytes; }
    Micros busy_time() const noexcept { return m_busy; }

private:
    struct Line {
        SpiSlave* slave;
        bool selected = false;
    };

    Line& line(ChipSelect cs);
    const Line& line(ChipSelect cs) const;
    Micros byte_time();

    Scheduler& m_scheduler;
    SpiConfig m_config;
    std::map<ChipSelect, Line> m_lines;
    std::uint64_t m_time_carry = 0;
    bool m_tx_ready = true;
    bool m_rx_ready = false;
    std::uint8_t m_rxbuf = 0;
    std::uint64_t m_bytes = 0;
    Micros m_busy = 0;
    std::function<void(const BusTraceEntry&)> m_trace;
};

} // namespace pnp::spi
