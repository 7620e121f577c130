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
#include "pnp/codec.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>

namespace pnp::codec {

namespace {

constexpr std::array<const char*, 16> kRegNames = {
    "MODE",  "STATUS", "BASS",   "CLOCKF", "DECODE_TIME", "AUDATA",  "WRAM",    "WRAMADDR",
    "HDAT0", "HDAT1",  "AIADDR", "VOL",    "AICTRL0",     "AICTRL1", "AICTRL2", "AICTRL3",
};

// Instruction RAM as seen through WRAMADDR.
constexpr std::uint16_t kIramBase = 0x8000;

std::string hex16(std::uint16_t v)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%04X", v);
    return buf;
}

} // namespace

const char* register_name(std::uint8_t addr) noexcept
{
    return addr < kRegNames.size() ? kRegNames[addr] : "?";
}

std::optional<std::uint8_t> parse_register(std::string_view name)
{
    const std::string up = text::to_upper(text::trim(name));
    for (std::size_t i = 0; i < kRegNames.size(); ++i) {
        if (up == kRegNames[i]) {
            return static_cast<std::uint8_t>(i);
        }
    }
    if (auto v = text::parse_number(up); v && *v < 16) {
        return static_cast<std::uint8_t>(*v);
    }
    return std::nullopt;
}

CodecConfig::CodecConfig()
{
    reset_values[reg::MODE] = SM_SDINEW | 0x4000; // SM_SDINEW | SM_LINE1
    reset_values[reg::STATUS] = 0x0060;           // SS_VER = 6
}

CodecConfig CodecConfig::parse(std::istream& in)
{
    CodecConfig c;
    std::string raw;
    unsigned lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string_view line = text::trim(text::strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw CodecConfigError("line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = text::to_lower(text::trim(line.substr(0, eq)));
        const std::string_view val = text::trim(line.substr(eq + 1));
        const auto num = text::parse_number(val);
        if (!num) {
            throw CodecConfigError("line " + std::to_string(lineno) + ": bad number '" + std::string(val) + "'");
        }
        if (key == "fifo_capacity") {
            if (*num < kSdiChunk) {
                throw CodecConfigError("fifo_capacity must hold at least one 32-byte chunk");
            }
            c.fifo_capacity = *num;
        } else if (key == "max_data_clock_hz") {
            c.max_data_clock_hz = *num;
        } else if (key == "startup_delay_us") {
            c.startup_delay_us = *num;
        } else if (key == "soft_reset_delay_us") {
            c.soft_reset_delay_us = *num;
        } else if (key == "sci_settle_us") {
            c.sci_settle_us = *num;
        } else if (key == "bitrate_bps") {
            if (*num < 8) {
                throw CodecConfigError("bitrate_bps must be at least 8");
            }
            c.bitrate_bps = *num;
        } else if (key == "spi_mode") {
            c.format.mode = spi::SpiMode::from_number(static_cast<int>(*num));
        } else if (key.rfind("reg.", 0) == 0) {
            const auto addr = parse_register(std::string_view(key).substr(4));
            if (!addr || *num > 0xFFFF) {
                throw CodecConfigError("line " + std::to_string(lineno) + ": bad register default");
            }
            c.reset_values[*addr] = static_cast<std::uint16_t>(*num);
        } else {
            throw CodecConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return c;
}

CodecModel::CodecModel(CodecConfig config) : m_config(std::move(config)), m_bitrate(m_config.bitrate_bps)
{
    m_regs = m_config.reset_values;
    m_ready_at = m_config.startup_delay_us;
}

void CodecModel::set_bitrate(std::uint64_t bps)
{
    if (bps < 8) {
        throw CodecConfigError("bitrate must be at least 8 bps");
    }
    m_bitrate = bps;
}

bool CodecModel::running(Micros now) const noexcept
{
    return !m_in_reset && now >= m_ready_at;
}

bool CodecModel::paused() const
{
    const auto it = m_wram.find(kPlayModeAddr);
    return it != m_wram.end() && (it->second & kPlayModePause);
}

void CodecModel::sync(Micros now)
{
    if (now <= m_last_sync) {
        return;
    }
    const Micros start = std::max(m_last_sync, m_ready_at);
    m_last_sync = now;
    if (m_in_reset || paused() || now <= start || m_fifo.empty()) {
        m_drain_carry = 0;
        return;
    }
    // Overclocked SDI makes the decoder run through the stream at double speed.
    const std::uint64_t rate = (m_bitrate / 8) * (m_fast_mode ? 2 : 1);
    const std::uint64_t owed = (now - start) * rate + m_drain_carry;
    std::uint64_t n = owed / kSeconds;
    m_drain_carry = owed % kSeconds;
    if (n >= m_fifo.size()) {
        n = m_fifo.size();
        m_drain_carry = 0;
    }
    m_fifo.erase(m_fifo.begin(), m_fifo.begin() + static_cast<std::ptrdiff_t>(n));
    m_consumed += n;
}

void CodecModel::hard_reset()
{
    m_regs = m_config.reset_values;
    m_wram.clear();
    m_wram_ptr = 0;
    m_patch.clear();
    m_discarded += m_fifo.size();
    m_fifo.clear();
    m_drain_carry = 0;
    m_settle_until = 0;
    m_fast_mode = false;
    m_decode_base_bytes = m_consumed;
}

void CodecModel::set_reset(bool asserted, Micros now)
{
    sync(now);
    if (asserted) {
        hard_reset();
        m_in_reset = true;
    } else if (m_in_reset) {
        m_in_reset = false;
        m_ready_at = now + m_config.startup_delay_us;
    }
}

bool CodecModel::dreq(Micros now)
{
    sync(now);
    return !m_dreq_stuck && running(now) && now >= m_settle_until && fifo_free() >= kSdiChunk;
}

std::uint16_t CodecModel::peek(std::uint8_t addr) const
{
    addr &= 0x0F;
    switch (addr) {
    case reg::STATUS:
        return static_cast<std::uint16_t>(m_regs[addr] |
                                          (running(m_last_sync) && !m_dreq_stuck ? STATUS_READY : 0));
    case reg::DECODE_TIME:
        return static_cast<std::uint16_t>(m_regs[addr] + (m_consumed - m_decode_base_bytes) * 8 / m_bitrate);
    case reg::WRAM:
        return wram(m_wram_ptr);
    default:
        return m_regs[addr];
    }
}

std::uint16_t CodecModel::wram(std::uint16_t addr) const
{
    const auto it = m_wram.find(addr);
    return it == m_wram.end() ? 0 : it->second;
}

std::uint16_t CodecModel::patch_checksum() const noexcept
{
    return codec::patch_checksum(m_patch);
}

std::uint16_t CodecModel::sci_read(std::uint8_t addr, Micros now)
{
    sync(now);
    const std::uint16_t v = peek(addr);
    if (addr == reg::WRAM) {
        ++m_wram_ptr;
    }
    return v;
}

void CodecModel::sci_write(std::uint8_t addr, std::uint16_t value, Micros now)
{
    sync(now);
    ++m_sci_writes;
    m_settle_until = now + m_config.sci_settle_us;
    switch (addr) {
    case reg::MODE:
        if (value & (SM_RESET | SM_CANCEL)) {
            m_discarded += m_fifo.size();
            m_fifo.clear();
            m_drain_carry = 0;
        }
        if (value & SM_RESET) {
            m_ready_at = now + m_config.soft_reset_delay_us;
        }
        m_regs[addr] = static_cast<std::uint16_t>(value & ~(SM_RESET | SM_CANCEL));
        break;
    case reg::STATUS:
        m_regs[addr] = static_cast<std::uint16_t>(value & ~STATUS_READY);
        break;
    case reg::DECODE_TIME:
        m_regs[addr] = value;
        m_decode_base_bytes = m_consumed;
        break;
    case reg::WRAMADDR:
        m_regs[addr] = value;
        m_wram_ptr = value;
        break;
    case reg::WRAM:
        m_regs[addr] = value;
        m_wram[m_wram_ptr] = value;
        if (m_wram_ptr >= kIramBase) {
            m_patch.push_back(value);
        }
        ++m_wram_ptr;
        break;
    default:
        m_regs[addr] = value;
        break;
    }
}

void CodecModel::SciPort::on_select(Micros /*now*/)
{
    index = 0;
}

void CodecModel::SciPort::on_deselect(Micros /*now*/)
{
    index = 0;
}

std::uint8_t CodecModel::SciPort::exchange(std::uint8_t mosi, const spi::TransferContext& ctx)
{
    m_model.sync(ctx.now);
    if (m_model.m_in_reset) {
        index = 0;
        return 0x00;
    }
    std::uint8_t out = 0x00;
    switch (index) {
    case 0:
        opcode = mosi;
        break;
    case 1:
        addr = mosi;
        if (addr > 0x0F) {
            opcode = 0; // not a register; ignore the rest
        } else if (opcode == kSciRead) {
            read_value = m_model.sci_read(addr, ctx.now);
        }
        break;
    case 2:
        value = static_cast<std::uint16_t>(mosi << 8);
        if (opcode == kSciRead) {
            out = static_cast<std::uint8_t>(read_value >> 8);
        }
        break;
    default:
        value = static_cast<std::uint16_t>(value | mosi);
        if (opcode == kSciRead) {
            out = static_cast<std::uint8_t>(read_value);
        } else if (opcode == kSciWrite) {
            m_model.sci_write(addr, value, ctx.now);
        }
        break;
    }
    index = (index + 1) % 4;
    return out;
}

void CodecModel::SdiPort::on_select(Micros now)
{
    burst = 0;
    burst_dreq = m_model.dreq(now);
}

std::uint8_t CodecModel::SdiPort::exchange(std::uint8_t mosi, const spi::TransferContext& ctx)
{
    CodecModel& m = m_model;
    m.sync(ctx.now);
    if (++burst == 1 && !burst_dreq) {
        ++m.m_bursts_without_dreq;
    }
    if (burst == kSdiChunk + 1) {
        ++m.m_oversize_bursts;
    }
    m.m_max_burst = std::max(m.m_max_burst, burst);
    if (m.m_in_reset) {
        ++m.m_dropped;
        return 0x00;
    }
    if (ctx.bitrate_hz > m.m_config.max_data_clock_hz) {
        m.m_fast_mode = true;
        ++m.m_fast_bytes;
    } else {
        m.m_fast_mode = false;
    }
    if (m.m_fifo.size() >= m.m_config.fifo_capacity) {
        ++m.m_dropped;
    } else {
        m.m_fifo.push_back(mosi);
        ++m.m_accepted;
    }
    return 0x00;
}

// ---------------------------------------------------------------------------

std::vector<std::uint16_t> default_patch_blob()
{
    std::vector<std::uint16_t> words(96);
    std::uint32_t x = 0x1063;
    for (auto& w : words) {
        x = x * 1103515245u + 12345u;
        w = static_cast<std::uint16_t>(x >> 16);
    }
    return words;
}

std::uint16_t patch_checksum(const std::vector<std::uint16_t>& words) noexcept
{
    std::uint32_t a = 1, b = 0;
    for (std::uint16_t w : words) {
        a = (a + w) % 65521;
        b = (b + a) % 65521;
    }
    return static_cast<std::uint16_t>(a ^ (b << 3));
}

CodecHost::CodecHost(spi::SpiBus& bus, CodecModel& pins, CodecPins lines, CodecHostOptions options)
    : m_bus(bus), m_pins(pins), m_lines(lines), m_opts(std::move(options))
{
    if (m_lines.cs_command == m_lines.cs_data) {
        throw spi::SpiError(spi::SpiErrc::BadConfig, "codec command and data chip selects must differ");
    }
    if (m_opts.patch.empty()) {
        m_opts.patch = default_patch_blob();
    }
}

void CodecHost::use_clock(std::uint64_t hz)
{
    spi::SpiConfig c = m_bus.config();
    c.mode = m_opts.mode;
    c.msb_first = m_opts.msb_first;
    c.divisor = spi::divisor_for(c.source_clock_hz, hz);
    if (!(c == m_bus.config())) {
        m_bus.configure(c);
    }
}

void CodecHost::spi_init()
{
    use_clock(m_opts.sci_clock_hz);
    m_bus.deselect(m_lines.cs_command);
    m_bus.deselect(m_lines.cs_data);
}

bool CodecHost::dreq()
{
    return m_pins.dreq(m_bus.scheduler().now());
}

void CodecHost::wait_dreq(Micros timeout, CodecErrc err, const char* what)
{
    Scheduler& s = m_bus.scheduler();
    const Micros deadline = s.now() + timeout;
    while (!m_pins.dreq(s.now())) {
        if (s.now() >= deadline) {
            throw CodecError(err, what);
        }
        m_bus.delay(1);
    }
}

void CodecHost::vs_test_init_hardware()
{
    spi_init();
    m_pins.set_reset(true, m_bus.scheduler().now());
    m_bus.delay(m_opts.reset_pulse_us);
    m_pins.set_reset(false, m_bus.scheduler().now());
    wait_dreq(m_opts.dreq_timeout_us, CodecErrc::DreqTimeout, "DREQ did not rise after reset");
}

void CodecHost::write_sci(std::uint8_t addr, std::uint16_t value)
{
    wait_dreq(m_opts.busy_timeout_us, CodecErrc::BusyError, "DREQ low before SCI write");
    use_clock(m_opts.sci_clock_hz);
    const std::array<std::uint8_t, 4> frame = {kSciWrite, addr, static_cast<std::uint8_t>(value >> 8),
                                               static_cast<std::uint8_t>(value)};
    m_bus.select(m_lines.cs_command);
    m_bus.transmit(m_lines.cs_command, frame);
    m_bus.deselect(m_lines.cs_command);
}

std::uint16_t CodecHost::read_sci(std::uint8_t addr)
{
    wait_dreq(m_opts.busy_timeout_us, CodecErrc::BusyError, "DREQ low before SCI read");
    use_clock(m_opts.sci_clock_hz);
    m_bus.select(m_lines.cs_command);
    m_bus.transfer(m_lines.cs_command, kSciRead);
    m_bus.transfer(m_lines.cs_command, addr);
    const std::uint8_t hi = m_bus.receive(m_lines.cs_command);
    const std::uint8_t lo = m_bus.receive(m_lines.cs_command);
    m_bus.deselect(m_lines.cs_command);
    return static_cast<std::uint16_t>(hi << 8 | lo);
}

SdiStatus CodecHost::write_sdi(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() > kSdiChunk) {
        return SdiStatus::ChunkTooLarge;
    }
    if (bytes.empty()) {
        return SdiStatus::Ok;
    }
    if (!dreq()) {
        return SdiStatus::Backpressure;
    }
    use_clock(m_opts.sdi_clock_hz);
    m_bus.select(m_lines.cs_data);
    m_bus.transmit(m_lines.cs_data, bytes);
    m_bus.deselect(m_lines.cs_data);
    m_sdi_bytes += bytes.size();
    return SdiStatus::Ok;
}

void CodecHost::write_spi_byte_sdi(std::uint8_t byte)
{
    const std::array<std::uint8_t, 1> one = {byte};
    if (write_sdi(one) != SdiStatus::Ok) {
        throw CodecError(CodecErrc::BusyError, "DREQ low before SDI byte");
    }
}

void CodecHost::set_pause(bool paused)
{
    write_sci(reg::WRAMADDR, kPlayModeAddr);
    std::uint16_t mode = read_sci(reg::WRAM);
    mode = paused ? static_cast<std::uint16_t>(mode | kPlayModePause)
                  : static_cast<std::uint16_t>(mode & ~kPlayModePause);
    write_sci(reg::WRAMADDR, kPlayModeAddr);
    write_sci(reg::WRAM, mode);
}

void CodecHost::cancel_playback()
{
    if (read_paused()) {
        set_pause(false);
    }
    write_sci(reg::MODE, static_cast<std::uint16_t>(read_sci(reg::MODE) | SM_CANCEL));
}

bool CodecHost::read_paused()
{
    write_sci(reg::WRAMADDR, kPlayModeAddr);
    return (read_sci(reg::WRAM) & kPlayModePause) != 0;
}

void CodecHost::vs_test_init_software()
{
    use_clock(m_opts.sci_clock_hz);

    const std::uint16_t mode = read_sci(reg::MODE);
    write_sci(reg::MODE, static_cast<std::uint16_t>(mode | SM_SDISHARE));

    write_sci(reg::AICTRL1, m_opts.sanity_a);
    write_sci(reg::AICTRL2, m_opts.sanity_b);
    const std::uint16_t a = read_sci(reg::AICTRL1);
    const std::uint16_t b = read_sci(reg::AICTRL2);
    if (a != m_opts.sanity_a || b != m_opts.sanity_b) {
        throw CodecError(CodecErrc::SanityCheckFailed, "SCI read-back " + hex16(a) + "/" + hex16(b) +
                                                           ", expected " + hex16(m_opts.sanity_a) + "/" +
                                                           hex16(m_opts.sanity_b));
    }
    write_sci(reg::AICTRL1, 0);
    write_sci(reg::AICTRL2, 0);

    write_sci(reg::CLOCKF, m_opts.clockf);
    write_sci(reg::VOL, m_opts.volume);

    write_sci(reg::WRAMADDR, m_opts.patch_address);
    for (std::uint16_t w : m_opts.patch) {
        write_sci(reg::WRAM, w);
    }

    write_sci(reg::WRAMADDR, m_opts.patch_address);
    std::vector<std::uint16_t> back;
    back.reserve(m_opts.patch.size());
    for (std::size_t i = 0; i < m_opts.patch.size(); ++i) {
        back.push_back(read_sci(reg::WRAM));
    }
    if (patch_checksum(back) != patch_checksum(m_opts.patch)) {
        throw CodecError(CodecErrc::PatchVerifyFailed, "patch checksum mismatch after upload");
    }
}

} // namespace pnp::codec
