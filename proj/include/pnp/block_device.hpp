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
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace pnp {

inline constexpr std::size_t kSectorSize = 512;
using Sector = std::array<std::uint8_t, kSectorSize>;

// Read-only sector source for the filesystem layer.
class BlockDevice {
public:
    virtual ~BlockDevice() = default;
    virtual Sector read_sector(std::uint32_t lba) = 0;
    virtual std::uint64_t sector_count() const = 0;
};

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raw disk image: sector k at byte offset 512*k, length a multiple of 512.
class DiskImage {
public:
    DiskImage() = default;
    explicit DiskImage(std::vector<std::uint8_t> bytes);

    static DiskImage load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::uint64_t sector_count() const noexcept { return m_bytes.size() / kSectorSize; }
    Sector sector(std::uint32_t lba) const;
    void write_sector(std::uint32_t lba, const Sector& data);

    std::vector<std::uint8_t>& bytes() noexcept { return m_bytes; }
    const std::vector<std::uint8_t>& bytes() const noexcept { return m_bytes; }

private:
    std::vector<std::uint8_t> m_bytes;
};

class MemoryBlockDevice : public BlockDevice {
public:
    explicit MemoryBlockDevice(const DiskImage& image) : m_image(&image) {}

    Sector read_sector(std::uint32_t lba) override;
    std::uint64_t sector_count() const override { return m_image->sector_count(); }
    std::uint64_t reads() const noexcept { return m_reads; }

private:
    const DiskImage* m_image;
    std::uint64_t m_reads = 0;
};

} // namespace pnp
