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
    Host side of the SD SPI protocol. Function names follow the FatFs
    disk I/O layer the firmware ports.
*/
#include "pnp/sd.hpp"

#include <algorithm>

namespace pnp::sd {

namespace {

std::string hex8(unsigned v)
{
    static const char* digits = "0123456789ABCDEF";
    return std::string("0x") + digits[(v >> 4) & 0xF] + digits[v & 0xF];
}

SdError r1_error(std::uint8_t index, std::uint8_t r1)
{
    const std::string what = "CMD" + std::to_string(index) + " rejected, r1=" + hex8(r1);
    if (r1 & (R1_PARAMETER_ERROR | R1_ADDRESS_ERROR)) {
        return SdError(SdErrc::RangeError, what);
    }
    if (r1 & R1_ILLEGAL_COMMAND) {
        return SdError(SdErrc::IllegalCommand, what);
    }
    return SdError(SdErrc::CardError, what);
}

} // namespace

SdHost::SdHost(spi::SpiBus& bus, spi::ChipSelect cs, SdHostOptions options)
    : m_bus(bus), m_cs(cs), m_opts(options)
{
    m_spi.mode = m_opts.mode;
    m_spi.msb_first = true;
    m_spi.source_clock_hz = bus.config().source_clock_hz;
    m_spi.divisor = spi::divisor_for(m_spi.source_clock_hz, m_opts.init_clock_hz);
}

void SdHost::apply_clock()
{
    if (!(m_bus.config() == m_spi)) {
        m_bus.configure(m_spi);
    }
}

void SdHost::power_on()
{
    m_spi.divisor = spi::divisor_for(m_spi.source_clock_hz, m_opts.init_clock_hz);
    apply_clock();
    m_bus.deselect(m_cs);
    m_bus.idle_clocks(m_opts.power_on_bytes);
}

void SdHost::select()
{
    apply_clock();
    m_bus.select(m_cs);
    m_bus.receive(m_cs); // dummy clock to enable DO
    start_ready_timer(m_opts.ready_timeout_ticks);
    if (!card_ready()) {
        deselect();
        throw SdError(SdErrc::Timeout, "card stayed busy after select");
    }
}

void SdHost::deselect()
{
    m_bus.deselect(m_cs);
    m_bus.idle_clocks(1); // let the card release DO
}

bool SdHost::card_ready()
{
    m_last_ready_polls = 0;
    while (m_timer2 > 0 && m_last_ready_polls < m_opts.max_wait_polls) {
        ++m_last_ready_polls;
        if (m_bus.receive(m_cs) == 0xFF) {
            return true;
        }
    }
    return false;
}

void SdHost::disk_timeproc() noexcept
{
    if (m_timer1 > 0) {
        --m_timer1;
    }
    if (m_timer2 > 0) {
        --m_timer2;
    }
}

SdResponse SdHost::receive_response(std::uint8_t index)
{
    SdResponse r;
    bool got = false;
    for (unsigned i = 0; i < m_opts.ncr_poll_bytes; ++i) {
        const std::uint8_t b = m_bus.receive(m_cs);
        if (!(b & 0x80)) {
            r.r1 = b;
            got = true;
            break;
        }
    }
    if (!got) {
        throw SdError(SdErrc::Timeout, "no response to CMD" + std::to_string(index) + " within N_cr");
    }
    if (index == CMD8 || index == CMD58) {
        const auto bytes = m_bus.receive_multi(m_cs, 4);
        r.extra = std::array<std::uint8_t, 4>{bytes[0], bytes[1], bytes[2], bytes[3]};
    }
    return r;
}

SdResponse SdHost::command(std::uint8_t index, std::uint32_t argument, bool app)
{
    if (app) {
        const SdResponse r = command(CMD55, 0, false);
        if (r.r1 > R1_IDLE) {
            return r;
        }
    }

    deselect();
    select();

    const CommandFrame frame = make_frame(index, argument);
    m_bus.transmit(m_cs, frame);
    const SdResponse r = receive_response(index);
    m_trace.push_back({index, app, argument, frame[5], r.r1});
    return r;
}

SdResponse SdHost::send_cmd(std::uint8_t index, std::uint32_t argument)
{
    return command(index, argument, false);
}

SdResponse SdHost::send_acmd(std::uint8_t index, std::uint32_t argument)
{
    return command(index, argument, true);
}

std::uint8_t SdHost::disk_initialize()
{
    m_status |= STA_NOINIT;
    m_sector_count.reset();
    m_trace.clear();
    power_on();

    try {
        const SdResponse r0 = send_cmd(CMD0, 0);
        if (r0.r1 != R1_IDLE) {
            throw SdError(SdErrc::CardError, "CMD0 answered " + hex8(r0.r1) + ", expected 0x01");
        }

        const SdResponse r8 = send_cmd(CMD8, kCmd8Argument);
        if (r8.r1 != R1_IDLE) {
            throw SdError(SdErrc::CardError, "CMD8 answered " + hex8(r8.r1) + "; SD v1 cards are not supported");
        }
        if ((r8.extra_word() & 0xFFF) != (kCmd8Argument & 0xFFF)) {
            throw SdError(SdErrc::VoltageMismatch, "CMD8 echo does not match 0x1AA");
        }

        // Repeat CMD55 + ACMD41 until the card leaves the idle state.
        bool ready = false;
        for (unsigned attempt = 0; attempt < m_opts.acmd41_retry_cap; ++attempt) {
            const SdResponse r = send_acmd(ACMD41, kAcmd41Hcs);
            if (r.r1 == 0x00) {
                ready = true;
                break;
            }
            if (r.r1 != R1_IDLE) {
                throw SdError(SdErrc::CardError, "ACMD41 answered " + hex8(r.r1));
            }
            m_bus.delay(m_opts.acmd41_retry_gap);
        }
        if (!ready) {
            throw SdError(SdErrc::InitTimeout, "card still idle after " + std::to_string(m_opts.acmd41_retry_cap) +
                                                   " ACMD41 attempts");
        }

        const SdResponse r58 = send_cmd(CMD58, 0);
        if (r58.r1 != 0x00 || !(r58.extra_word() & OCR_CCS)) {
            throw SdError(SdErrc::CardError, "OCR reports a byte-addressed card; only SDHC is supported");
        }
    } catch (...) {
        deselect();
        throw;
    }
    deselect();

    m_spi.divisor = spi::divisor_for(m_spi.source_clock_hz, m_opts.run_clock_hz);
    m_status &= static_cast<std::uint8_t>(~STA_NOINIT);
    return m_status;
}

void SdHost::rcvr_datablock(std::span<std::uint8_t> out)
{
    m_timer1 = m_opts.token_timeout_ticks;
    unsigned polls = 0;
    std::uint8_t token = 0xFF;
    while (true) {
        token = m_bus.receive(m_cs);
        if (token != 0xFF) {
            break;
        }
        if (m_timer1 == 0 || ++polls >= m_opts.max_wait_polls) {
            throw SdError(SdErrc::TokenTimeout, "no data token from card");
        }
    }
    if (token != kStartBlockToken) {
        throw SdError(SdErrc::CardError, "data error token " + hex8(token));
    }
    const auto data = m_bus.receive_multi(m_cs, out.size());
    const auto crc = m_bus.receive_multi(m_cs, 2);
    std::copy(data.begin(), data.end(), out.begin());
    const std::uint16_t received = static_cast<std::uint16_t>(crc[0] << 8 | crc[1]);
    if (received != crc16(out)) {
        throw SdError(SdErrc::CrcMismatch, "data block CRC mismatch");
    }
}

std::vector<std::uint8_t> SdHost::disk_read(std::uint32_t lba, std::uint32_t count)
{
    if (m_status & STA_NOINIT) {
        throw SdError(SdErrc::NotReady, "disk_read before disk_initialize");
    }
    if (count == 0) {
        throw SdError(SdErrc::RangeError, "disk_read of zero sectors");
    }

    std::vector<std::uint8_t> out(static_cast<std::size_t>(count) * kSectorSize);
    try {
        for (std::uint32_t i = 0; i < count; ++i) {
            const SdResponse r = send_cmd(CMD17, lba + i);
            if (r.r1 != 0x00) {
                throw r1_error(CMD17, r.r1);
            }
            rcvr_datablock(std::span(out).subspan(static_cast<std::size_t>(i) * kSectorSize, kSectorSize));
        }
    } catch (...) {
        deselect();
        throw;
    }
    deselect();
    return out;
}

WriteDataResponse SdHost::disk_write(std::uint32_t lba, std::span<const std::uint8_t, kSectorSize> data)
{
    if (m_status & STA_NOINIT) {
        throw SdError(SdErrc::NotReady, "disk_write before disk_initialize");
    }

    WriteDataResponse result;
    try {
        const SdResponse r = send_cmd(CMD24, lba);
        if (r.r1 != 0x00) {
            throw r1_error(CMD24, r.r1);
        }
        m_bus.receive(m_cs); // one byte gap before the token
        m_bus.transfer(m_cs, kStartBlockToken);
        m_bus.transmit(m_cs, data);
        std::uint16_t crc = crc16(data);
        if (m_opts.corrupt_write_crc) {
            crc = static_cast<std::uint16_t>(~crc);
        }
        m_bus.transfer(m_cs, static_cast<std::uint8_t>(crc >> 8));
        m_bus.transfer(m_cs, static_cast<std::uint8_t>(crc));

        const std::uint8_t resp = m_bus.receive(m_cs);
        if ((resp & 0x11) != 0x01) {
            throw SdError(SdErrc::BadDataResponse, "not a data response token: " + hex8(resp));
        }
        const unsigned code = (resp >> 1) & 0x07;
        switch (code) {
        case 0b010: result = WriteDataResponse::Accepted; break;
        case 0b101: result = WriteDataResponse::CrcError; break;
        case 0b110: result = WriteDataResponse::WriteError; break;
        default: throw SdError(SdErrc::BadDataResponse, "unknown data response code " + hex8(code));
        }

        // Wait out the programming busy period.
        start_ready_timer(m_opts.ready_timeout_ticks);
        if (!card_ready()) {
            throw SdError(SdErrc::Timeout, "card busy after write");
        }
    } catch (...) {
        deselect();
        throw;
    }
    deselect();
    return result;
}

std::vector<std::uint8_t> SdHost::read_register_block(std::uint8_t index, std::size_t length, bool app)
{
    std::vector<std::uint8_t> out(length);
    try {
        const SdResponse r = command(index, 0, app);
        if (r.r1 != 0x00) {
            throw r1_error(index, r.r1);
        }
        rcvr_datablock(out);
    } catch (...) {
        deselect();
        throw;
    }
    deselect();
    return out;
}

std::uint64_t SdHost::card_sector_count()
{
    if (!m_sector_count) {
        const auto csd = read_register_block(CMD9, 16);
        if ((csd[0] >> 6) != 1) {
            throw SdError(SdErrc::CardError, "CSD is not version 2.0");
        }
        const std::uint32_t c_size = (std::uint32_t{csd[7]} & 0x3F) << 16 | std::uint32_t{csd[8]} << 8 | csd[9];
        m_sector_count = (std::uint64_t{c_size} + 1) << 10;
    }
    return *m_sector_count;
}

Sector SdBlockDevice::read_sector(std::uint32_t lba)
{
    const auto bytes = m_host->disk_read(lba, 1);
    Sector s;
    std::copy(bytes.begin(), bytes.end(), s.begin());
    return s;
}

} // namespace pnp::sd
