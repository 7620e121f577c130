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
    Read-only FAT32 over a BlockDevice, with the FatFs-style surface the
    player firmware uses: mount, open, read, close, plus directory listing.

    Short (8.3) names only; long-name entries are skipped. The card must
    carry an MBR. A bare volume boot record at sector 0 is not accepted.
*/
#pragma once

#include "pnp/block_device.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pnp::fat {

// DiskError carries the value FatFs' check_fs() returns for a sector 0
// without the 0xAA55 signature.
enum class FatErrc {
    DiskError = 3,
    NotFound = 4,
    NotADirectory = 5,
    IsDirectory = 7,
    ClosedHandle = 9,
    NoFatPartition = 13,
    BadBpb = 14,
    ChainError = 15,
};

class FatError : public std::runtime_error {
public:
    FatError(FatErrc code, const std::string& what) : std::runtime_error(what), m_code(code) {}
    FatErrc code() const noexcept { return m_code; }
    int value() const noexcept { return static_cast<int>(m_code); }

private:
    FatErrc m_code;
};

inline constexpr std::uint16_t kBootSignature = 0xAA55;
inline constexpr std::uint32_t kEndOfChain = 0x0FFFFFF8;
inline constexpr std::uint32_t kBadCluster = 0x0FFFFFF7;
inline constexpr std::uint32_t kMinFat32Clusters = 65525;

struct PartitionEntry {
    std::uint8_t status = 0;
    std::uint8_t type = 0;
    std::uint32_t start_lba = 0;
    std::uint32_t sector_count = 0;

    bool is_fat32() const noexcept { return type == 0x0B || type == 0x0C; }
};

struct Mbr {
    std::array<PartitionEntry, 4> partitions{};
    std::uint16_t signature = 0; // little-endian word at 510

    bool valid() const noexcept { return signature == kBootSignature; }
    static Mbr parse(const Sector& sector0);
};

struct Geometry {
    std::uint32_t partition_start_lba = 0;
    std::uint32_t partition_sectors = 0;
    std::uint32_t bytes_per_sector = 0;
    std::uint32_t sectors_per_cluster = 0;
    std::uint32_t reserved_sectors = 0;
    std::uint32_t fat_count = 0;
    std::uint32_t fat_size_sectors = 0;
    std::uint32_t fat_start_lba = 0;
    std::uint32_t data_start_lba = 0;
    std::uint32_t root_dir_cluster = 0;
    std::uint32_t total_clusters = 0;
    std::uint32_t volume_id = 0;
    std::string label;
};

namespace attr {
inline constexpr std::uint8_t ReadOnly = 0x01;
inline constexpr std::uint8_t Hidden = 0x02;
inline constexpr std::uint8_t System = 0x04;
inline constexpr std::uint8_t VolumeId = 0x08;
inline constexpr std::uint8_t Directory = 0x10;
inline constexpr std::uint8_t Archive = 0x20;
inline constexpr std::uint8_t LongName = 0x0F;
} // namespace attr

struct DirEntry {
    std::string name; // "NAME.EXT", upper case
    std::uint8_t attributes = 0;
    std::uint32_t first_cluster = 0;
    std::uint32_t size = 0;

    bool is_directory() const noexcept { return (attributes & attr::Directory) != 0; }
    std::string extension() const;
};

class FileHandle;

class Volume {
public:
    // f_mount: MBR, first FAT32 partition, BPB.
    static Volume mount(BlockDevice& device);

    const Geometry& geometry() const noexcept { return m_geo; }
    BlockDevice& device() const noexcept { return *m_device; }

    std::vector<DirEntry> list_dir(std::string_view path) const;
    DirEntry stat(std::string_view path) const;
    FileHandle open(std::string_view path) const;

    // FAT entry of `cluster`; nullopt at end of chain.
    std::optional<std::uint32_t> next_cluster(std::uint32_t cluster) const;
    std::vector<std::uint32_t> cluster_chain(std::uint32_t first) const;
    std::uint32_t cluster_lba(std::uint32_t cluster) const;
    std::uint32_t cluster_bytes() const noexcept { return m_geo.sectors_per_cluster * kSectorSize; }

private:
    Volume(BlockDevice& device, Geometry geo) : m_device(&device), m_geo(std::move(geo)) {}

    std::vector<DirEntry> read_dir(std::uint32_t cluster) const;
    DirEntry root_entry() const;
    const Sector& fat_sector(std::uint32_t lba) const;

    BlockDevice* m_device;
    Geometry m_geo;
    mutable std::optional<std::uint32_t> m_fat_lba;
    mutable Sector m_fat_buf{};
};

// Open-file cursor. The handle keeps its own copy of the volume geometry,
// so it stays valid as long as the block device does.
class FileHandle {
public:
    // f_read: up to n bytes, fewer at end of file.
    std::vector<std::uint8_t> read(std::size_t n);
    void close();

    bool is_open() const noexcept { return m_open; }
    std::uint32_t size() const noexcept { return m_entry.size; }
    std::uint32_t offset() const noexcept { return m_offset; }
    bool eof() const noexcept { return m_offset >= m_entry.size; }
    const DirEntry& entry() const noexcept { return m_entry; }

private:
    friend class Volume;
    FileHandle(Volume volume, DirEntry entry);

    void check_open() const;

    Volume m_volume;
    DirEntry m_entry;
    bool m_open = true;
    std::uint32_t m_offset = 0;
    std::uint32_t m_cluster = 0;       // cluster holding m_offset
    std::uint32_t m_cluster_index = 0; // its position in the chain
    std::optional<std::uint32_t> m_buf_lba;
    Sector m_buf{};
};

} // namespace pnp::fat
