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
#include "pnp/spi.hpp"

#include <bit>
#include <cstdio>

namespace pnp::spi {

SpiMode SpiMode::from_number(int mode)
{
    if (mode < 0 || mode > 3) {
        throw SpiError(SpiErrc::BadConfig, "SPI mode must be 0..3");
    }
    return SpiMode{static_cast<std::uint8_t>(mode >> 1), static_cast<std::uint8_t>(mode & 1)};
}

void SpiConfig::validate() const
{
    if (divisor < 1) {
        throw SpiError(SpiErrc::BadConfig, "UCBRx divisor must be >= 1");
    }
    if (source_clock_hz == 0) {
        throw SpiError(SpiErrc::BadConfig, "BRCLK must be > 0 Hz");
    }
    if (mode.ckph > 1 || mode.ckpl > 1) {
        throw SpiError(SpiErrc::BadConfig, "ckph/ckpl are single bits");
    }
}

Bitrate effective_bitrate(const SpiConfig& config)
{
    config.validate();
    return {config.source_clock_hz / config.divisor, config.source_clock_hz % config.divisor};
}

std::uint32_t divisor_for(std::uint64_t source_clock_hz, std::uint64_t target_hz)
{
    if (target_hz == 0) {
        throw SpiError(SpiErrc::BadConfig, "target bit clock must be > 0 Hz");
    }
    const std::uint64_t d = (source_clock_hz + target_hz - 1) / target_hz;
    return static_cast<std::uint32_t>(d == 0 ? 1 : d);
}

namespace {

std::uint8_t reverse_bits(std::uint8_t b) noexcept
{
    b = static_cast<std::uint8_t>((b & 0xF0) >> 4 | (b & 0x0F) << 4);
    b = static_cast<std::uint8_t>((b & 0xCC) >> 2 | (b & 0x33) << 2);
    b = static_cast<std::uint8_t>((b & 0xAA) >> 1 | (b & 0x55) << 1);
    return b;
}

} // namespace

std::uint8_t skew_byte(std::uint8_t byte, const SpiFormat& master, const SpiFormat& slave) noexcept
{
    if (master.mode.ckph != slave.mode.ckph) {
        byte = master.mode.ckph > slave.mode.ckph ? std::rotl(byte, 1) : std::rotr(byte, 1);
    }
    if (master.mode.ckpl != slave.mode.ckpl) {
        byte ^= master.msb_first ? 0x80 : 0x01;
    }
    if (master.msb_first != slave.msb_first) {
        byte = reverse_bits(byte);
    }
    return byte;
}

std::string format_trace(const BusTraceEntry& e)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "t=%llu cs=%u mosi=%02X miso=%02X mode=%d/%d",
                  static_cast<unsigned long long>(e.t), static_cast<unsigned>(e.cs.id), e.mosi, e.miso,
                  e.master_mode, e.slave_mode);
    return buf;
}

SpiBus::SpiBus(Scheduler& scheduler, SpiConfig master) : m_scheduler(scheduler), m_config(master)
{
    m_config.validate();
}

void SpiBus::configure(const SpiConfig& config)
{
    config.validate();
    if (effective_bitrate(config).hz != effective_bitrate(m_config).hz) {
        m_time_carry = 0;
    }
    m_config = config;
}

void SpiBus::add_line(ChipSelect cs, SpiSlave& slave)
{
    if (m_lines.count(cs)) {
        throw SpiError(SpiErrc::BusContention, "chip select " + std::to_string(cs.id) + " already wired");
    }
    m_lines.emplace(cs, Line{&slave});
}

SpiBus::Line& SpiBus::line(ChipSelect cs)
{
    auto it = m_lines.find(cs);
    if (it == m_lines.end()) {
        throw SpiError(SpiErrc::UnknownChipSelect, "unknown chip select " + std::to_string(cs.id));
    }
    return it->second;
}

const SpiBus::Line& SpiBus::line(ChipSelect cs) const
{
    auto it = m_lines.find(cs);
    if (it == m_lines.end()) {
        throw SpiError(SpiErrc::UnknownChipSelect, "unknown chip select " + std::to_string(cs.id));
    }
    return it->second;
}

void SpiBus::select(ChipSelect cs)
{
    Line& l = line(cs);
    if (!l.selected) {
        l.selected = true;
        l.slave->on_select(m_scheduler.now());
    }
}

void SpiBus::deselect(ChipSelect cs)
{
    Line& l = line(cs);
    if (l.selected) {
        l.selected = false;
        l.slave->on_deselect(m_scheduler.now());
    }
}

bool SpiBus::is_selected(ChipSelect cs) const
{
    return line(cs).selected;
}

Micros SpiBus::byte_time()
{
    const std::uint64_t hz = effective_bitrate(m_config).hz;
    const std::uint64_t numer = 8 * kSeconds + m_time_carry;
    m_time_carry = numer % hz;
    return numer / hz;
}

void SpiBus::write_tx(ChipSelect cs, std::uint8_t byte)
{
    auto it = m_lines.find(cs);
    if (it == m_lines.end() || !it->second.selected) {
        throw SpiError(SpiErrc::NoSlaveSelected, "no slave selected on chip select " + std::to_string(cs.id));
    }
    for (const auto& [other, l] : m_lines) {
        if (other != cs && l.selected) {
            throw SpiError(SpiErrc::BusContention, "more than one chip select asserted");
        }
    }

    SpiSlave& slave = *it->second.slave;
    const SpiFormat master_fmt = m_config.format();
    const SpiFormat slave_fmt = slave.format();

    m_tx_ready = false;
    const Micros dt = byte_time();
    m_busy += dt;
    m_scheduler.advance(m_scheduler.now() + dt);

    const TransferContext ctx{m_scheduler.now(), effective_bitrate(m_config).hz};
    const std::uint8_t seen_by_slave = skew_byte(byte, master_fmt, slave_fmt);
    const std::uint8_t miso = slave.exchange(seen_by_slave, ctx);
    m_rxbuf = skew_byte(miso, master_fmt, slave_fmt);
    m_tx_ready = true;
    m_rx_ready = true;
    ++m_bytes;

    if (m_trace) {
        m_trace({ctx.now, cs, byte, m_rxbuf, m_config.mode.number(), slave_fmt.mode.number()});
    }
}

std::uint8_t SpiBus::read_rx()
{
    m_rx_ready = false;
    return m_rxbuf;
}

std::uint8_t SpiBus::transfer(ChipSelect cs, std::uint8_t out)
{
    write_tx(cs, out);
    // Completion is signalled by the receive flag, not by tx_ready.
    while (!rx_ready()) {
    }
    return read_rx();
}

void SpiBus::transmit(ChipSelect cs, std::span<const std::uint8_t> bytes)
{
    for (std::uint8_t b : bytes) {
        transfer(cs, b);
    }
}

std::vector<std::uint8_t> SpiBus::receive_multi(ChipSelect cs, std::size_t count)
{
    if (count == 0) {
        throw SpiError(SpiErrc::EmptyReceive, "receive_multi needs count >= 1");
    }
    std::vector<std::uint8_t> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(receive(cs));
    }
    return out;
}

void SpiBus::idle_clocks(std::size_t bytes)
{
    for (std::size_t i = 0; i < bytes; ++i) {
        const Micros dt = byte_time();
        m_busy += dt;
        m_scheduler.advance(m_scheduler.now() + dt);
        for (auto& [cs, l] : m_lines) {
            if (!l.selected) {
                l.slave->on_idle_clocks(8);
            }
        }
    }
}

void SpiBus::delay(Micros us)
{
    m_scheduler.advance(m_scheduler.now() + us);
}

} // namespace pnp::spi
