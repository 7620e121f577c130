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
#include "pnp/block_device.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace pnp {

DiskImage::DiskImage(std::vector<std::uint8_t> bytes) : m_bytes(std::move(bytes))
{
    if (m_bytes.empty() || m_bytes.size() % kSectorSize != 0) {
        throw ImageError("disk image size " + std::to_string(m_bytes.size()) +
                         " is not a non-zero multiple of 512");
    }
}

DiskImage DiskImage::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ImageError("cannot open disk image " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return DiskImage(std::move(bytes));
}

void DiskImage::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(m_bytes.data()), static_cast<std::streamsize>(m_bytes.size()));
    if (!out) {
        throw ImageError("cannot write disk image " + path.string());
    }
}

Sector DiskImage::sector(std::uint32_t lba) const
{
    if (lba >= sector_count()) {
        throw ImageError("sector " + std::to_string(lba) + " beyond image end");
    }
    Sector s;
    std::copy_n(m_bytes.begin() + static_cast<std::ptrdiff_t>(lba) * kSectorSize, kSectorSize, s.begin());
    return s;
}

void DiskImage::write_sector(std::uint32_t lba, const Sector& data)
{
    if (lba >= sector_count()) {
        throw ImageError("sector " + std::to_string(lba) + " beyond image end");
    }
    std::copy(data.begin(), data.end(), m_bytes.begin() + static_cast<std::ptrdiff_t>(lba) * kSectorSize);
}

Sector MemoryBlockDevice::read_sector(std::uint32_t lba)
{
    ++m_reads;
    return m_image->sector(lba);
}

} // namespace pnp
