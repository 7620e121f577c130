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
    Card side of the SD SPI protocol, plus the CRC and framing helpers both
    sides share.
*/
#include "pnp/sd.hpp"

#include <algorithm>

namespace pnp::sd {

namespace {

constexpr std::array<std::uint8_t, 256> make_crc7_table()
{
    // CRC7 kept left-aligned in a byte: polynomial 0x09 becomes 0x12.
    std::array<std::uint8_t, 256> t{};
    for (unsigned i = 0; i < 256; ++i) {
        unsigned reg = i;
        for (int bit = 0; bit < 8; ++bit) {
            reg = (reg & 0x80) ? ((reg << 1) ^ 0x12) : (reg << 1);
        }
        t[i] = static_cast<std::uint8_t>(reg);
    }
    return t;
}

constexpr std::array<std::uint16_t, 256> make_crc16_table()
{
    std::array<std::uint16_t, 256> t{};
    for (unsigned i = 0; i < 256; ++i) {
        unsigned reg = i << 8;
        for (int bit = 0; bit < 8; ++bit) {
            reg = (reg & 0x8000) ? ((reg << 1) ^ 0x1021) : (reg << 1);
        }
        t[i] = static_cast<std::uint16_t>(reg);
    }
    return t;
}

constexpr auto kCrc7Table = make_crc7_table();
constexpr auto kCrc16Table = make_crc16_table();

// Minimum clocks with CS high before a card accepts CMD0.
constexpr std::uint64_t kWakeClocks = 74;

constexpr std::uint8_t data_token(WriteDataResponse r)
{
    return static_cast<std::uint8_t>((static_cast<unsigned>(r) << 1) | 1u);
}

} // namespace

std::uint8_t crc7(std::span<const std::uint8_t> bytes) noexcept
{
    std::uint8_t reg = 0;
    for (std::uint8_t b : bytes) {
        reg = kCrc7Table[reg ^ b];
    }
    return static_cast<std::uint8_t>(reg >> 1);
}

std::uint16_t crc16(std::span<const std::uint8_t> bytes) noexcept
{
    std::uint16_t crc = 0;
    for (std::uint8_t b : bytes) {
        crc = static_cast<std::uint16_t>((crc << 8) ^ kCrc16Table[((crc >> 8) ^ b) & 0xFF]);
    }
    return crc;
}

CommandFrame make_frame(std::uint8_t index, std::uint32_t argument) noexcept
{
    CommandFrame f{
        static_cast<std::uint8_t>(0x40 | (index & 0x3F)),
        static_cast<std::uint8_t>(argument >> 24),
        static_cast<std::uint8_t>(argument >> 16),
        static_cast<std::uint8_t>(argument >> 8),
        static_cast<std::uint8_t>(argument),
        0,
    };
    f[5] = static_cast<std::uint8_t>((crc7(std::span(f).first<5>()) << 1) | 1);
    return f;
}

bool frame_crc_ok(const CommandFrame& frame) noexcept
{
    return (frame[5] & 1) && (frame[5] >> 1) == crc7(std::span(frame).first<5>());
}

std::uint32_t SdResponse::extra_word() const noexcept
{
    if (!extra) {
        return 0;
    }
    const auto& e = *extra;
    return std::uint32_t{e[0]} << 24 | std::uint32_t{e[1]} << 16 | std::uint32_t{e[2]} << 8 | e[3];
}

// ---------------------------------------------------------------------------

SdCardModel::SdCardModel(DiskImage& image, SdCardOptions options) : m_image(&image), m_opts(options)
{
    // CID: manufacturer, OEM "PN", product "SIMSD", revision, serial, date.
    m_cid = {0x03, 'P', 'N', 'S', 'I', 'M', 'S', 'D', 0x10, 0x12, 0x34, 0x56, 0x78, 0x01, 0x9A, 0x00};
    m_cid[15] = static_cast<std::uint8_t>((crc7(std::span(m_cid).first<15>()) << 1) | 1);

    // CSD version 2.0: capacity = (C_SIZE + 1) * 512 KiB.
    const std::uint64_t sectors = image.sector_count();
    const std::uint32_t c_size = sectors >= 1024 ? static_cast<std::uint32_t>(sectors / 1024 - 1) : 0;
    m_csd = {0x40, 0x0E, 0x00, 0x32, 0x5B, 0x59, 0x00,
             static_cast<std::uint8_t>((c_size >> 16) & 0x3F),
             static_cast<std::uint8_t>(c_size >> 8),
             static_cast<std::uint8_t>(c_size),
             0x7F, 0x80, 0x0A, 0x40, 0x00, 0x00};
    m_csd[15] = static_cast<std::uint8_t>((crc7(std::span(m_csd).first<15>()) << 1) | 1);

    m_scr = {0x02, 0x35, 0x80, 0x00, 0x00, 0x00, 0x00, 0x00};
}

std::uint32_t SdCardModel::ocr() const noexcept
{
    std::uint32_t ocr = OCR_VOLTAGE_WINDOW;
    if (m_state == SdCardState::Ready) {
        ocr |= OCR_BUSY | OCR_CCS;
    }
    return ocr;
}

std::uint8_t SdCardModel::idle_bit() const noexcept
{
    return m_state == SdCardState::Ready ? 0 : R1_IDLE;
}

void SdCardModel::on_select(Micros)
{
    m_selected = true;
}

void SdCardModel::on_deselect(Micros)
{
    // Deselecting aborts any transfer; traffic is byte-aligned to CS.
    m_selected = false;
    m_out.clear();
    m_cmd_len = 0;
    m_rx = RxState::Command;
    m_write_buf.clear();
}

void SdCardModel::on_idle_clocks(std::size_t cycles)
{
    m_idle_cycles += cycles;
}

std::uint8_t SdCardModel::exchange(std::uint8_t mosi, const spi::TransferContext&)
{
    if (m_state == SdCardState::Uninitialized && m_idle_cycles < kWakeClocks) {
        return 0xFF;
    }

    std::uint8_t out = 0xFF;
    if (!m_out.empty()) {
        out = m_out.front();
        m_out.pop_front();
    } else if (m_forced_busy > 0) {
        --m_forced_busy;
        out = 0x00;
    }

    switch (m_rx) {
    case RxState::Command:
        if (m_cmd_len == 0 && (mosi & 0xC0) != 0x40) {
            break;
        }
        m_cmd[m_cmd_len++] = mosi;
        if (m_cmd_len == m_cmd.size()) {
            m_cmd_len = 0;
            execute(m_cmd);
        }
        break;
    case RxState::WaitWriteToken:
        if (mosi == kStartBlockToken) {
            m_rx = RxState::WriteData;
            m_write_buf.clear();
        }
        break;
    case RxState::WriteData:
        m_write_buf.push_back(mosi);
        if (m_write_buf.size() == kSectorSize + 2) {
            finish_write();
            m_rx = RxState::Command;
        }
        break;
    }
    return out;
}

void SdCardModel::respond_r1(std::uint8_t r1)
{
    for (unsigned i = 0; i < m_opts.ncr_bytes; ++i) {
        m_out.push_back(0xFF);
    }
    m_out.push_back(r1);
}

void SdCardModel::queue_block(std::span<const std::uint8_t> data, bool corrupt_crc)
{
    for (unsigned i = 0; i < m_opts.nac_bytes; ++i) {
        m_out.push_back(0xFF);
    }
    m_out.push_back(kStartBlockToken);
    m_out.insert(m_out.end(), data.begin(), data.end());
    std::uint16_t crc = crc16(data);
    if (corrupt_crc) {
        crc ^= 0x0001;
    }
    m_out.push_back(static_cast<std::uint8_t>(crc >> 8));
    m_out.push_back(static_cast<std::uint8_t>(crc));
}

void SdCardModel::execute(const CommandFrame& frame)
{
    ++m_commands;
    const std::uint8_t index = frame[0] & 0x3F;
    const std::uint32_t arg = std::uint32_t{frame[1]} << 24 | std::uint32_t{frame[2]} << 16 |
                              std::uint32_t{frame[3]} << 8 | frame[4];
    const bool app = m_app_cmd;
    m_app_cmd = false;

    const bool crc_ok = frame_crc_ok(frame);
    if (!crc_ok) {
        ++m_crc_failures;
    }

    // Until CMD0 puts it in SPI mode the card ignores everything else.
    if (m_state == SdCardState::Uninitialized && index != CMD0) {
        return;
    }
    if (!crc_ok && (index == CMD0 || index == CMD8 || m_opts.crc_check_all)) {
        respond_r1(R1_CRC_ERROR | idle_bit());
        return;
    }

    const bool ready = m_state == SdCardState::Ready;

    if (app) {
        switch (index) {
        case ACMD41:
            if (m_opts.never_ready || !(arg & kAcmd41Hcs)) {
                respond_r1(R1_IDLE);
            } else if (!ready && m_acmd41_polls < m_opts.acmd41_delay) {
                ++m_acmd41_polls;
                respond_r1(R1_IDLE);
            } else {
                m_state = SdCardState::Ready;
                respond_r1(0x00);
            }
            return;
        case ACMD51:
            if (!ready) {
                respond_r1(R1_ILLEGAL_COMMAND | idle_bit());
                return;
            }
            respond_r1(0x00);
            queue_block(m_scr, false);
            return;
        default:
            respond_r1(R1_ILLEGAL_COMMAND | idle_bit());
            return;
        }
    }

    switch (index) {
    case CMD0:
        m_state = SdCardState::Idle;
        m_acmd41_polls = 0;
        respond_r1(R1_IDLE);
        break;
    case CMD8: {
        respond_r1(idle_bit());
        const bool voltage_ok = ((arg >> 8) & 0x0F) == 0x01;
        m_out.push_back(0x00);
        m_out.push_back(0x00);
        m_out.push_back(voltage_ok ? 0x01 : 0x00);
        m_out.push_back(static_cast<std::uint8_t>(arg));
        break;
    }
    case CMD9:
    case CMD10:
        if (!ready) {
            respond_r1(R1_ILLEGAL_COMMAND | idle_bit());
            break;
        }
        respond_r1(0x00);
        queue_block(index == CMD9 ? std::span<const std::uint8_t>(m_csd) : std::span<const std::uint8_t>(m_cid),
                    false);
        break;
    case CMD16:
        respond_r1(static_cast<std::uint8_t>(idle_bit() | (arg == kSectorSize ? 0 : R1_PARAMETER_ERROR)));
        break;
    case CMD17:
        if (!ready) {
            respond_r1(R1_ILLEGAL_COMMAND | idle_bit());
        } else if (arg >= m_image->sector_count()) {
            respond_r1(R1_PARAMETER_ERROR);
        } else {
            respond_r1(0x00);
            const Sector s = m_image->sector(arg);
            queue_block(s, m_opts.corrupt_read_crc);
        }
        break;
    case CMD24:
        if (!ready) {
            respond_r1(R1_ILLEGAL_COMMAND | idle_bit());
        } else if (arg >= m_image->sector_count()) {
            respond_r1(R1_PARAMETER_ERROR);
        } else {
            respond_r1(0x00);
            m_write_lba = arg;
            m_rx = RxState::WaitWriteToken;
        }
        break;
    case CMD55:
        m_app_cmd = true;
        respond_r1(idle_bit());
        break;
    case CMD58: {
        respond_r1(idle_bit());
        const std::uint32_t v = ocr();
        m_out.push_back(static_cast<std::uint8_t>(v >> 24));
        m_out.push_back(static_cast<std::uint8_t>(v >> 16));
        m_out.push_back(static_cast<std::uint8_t>(v >> 8));
        m_out.push_back(static_cast<std::uint8_t>(v));
        break;
    }
    default:
        respond_r1(R1_ILLEGAL_COMMAND | idle_bit());
        break;
    }
}

void SdCardModel::finish_write()
{
    const std::span<const std::uint8_t> data(m_write_buf.data(), kSectorSize);
    const std::uint16_t received = static_cast<std::uint16_t>(m_write_buf[kSectorSize] << 8 |
                                                              m_write_buf[kSectorSize + 1]);
    WriteDataResponse result = WriteDataResponse::Accepted;
    if (received != crc16(data)) {
        result = WriteDataResponse::CrcError;
    } else if (m_opts.read_only) {
        result = WriteDataResponse::WriteError;
    }

    m_out.push_back(data_token(result));
    if (result == WriteDataResponse::Accepted) {
        Sector s;
        std::copy(data.begin(), data.end(), s.begin());
        m_image->write_sector(m_write_lba, s);
        ++m_sectors_written;
    }
    for (unsigned i = 0; i < m_opts.write_busy_bytes; ++i) {
        m_out.push_back(0x00);
    }
    m_write_buf.clear();
}

} // namespace pnp::sd
