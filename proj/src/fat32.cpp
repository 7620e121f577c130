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
#include "pnp/fat32.hpp"

#include "text_util.hpp"

#include <algorithm>

namespace pnp::fat {

namespace {

// Byte offsets in the boot sector / BPB.
constexpr std::size_t BPB_BytsPerSec = 11;
constexpr std::size_t BPB_SecPerClus = 13;
constexpr std::size_t BPB_RsvdSecCnt = 14;
constexpr std::size_t BPB_NumFATs = 16;
constexpr std::size_t BPB_RootEntCnt = 17;
constexpr std::size_t BPB_TotSec16 = 19;
constexpr std::size_t BPB_FATSz16 = 22;
constexpr std::size_t BPB_TotSec32 = 32;
constexpr std::size_t BPB_FATSz32 = 36;
constexpr std::size_t BPB_RootClus = 44;
constexpr std::size_t BS_VolID = 67;
constexpr std::size_t BS_VolLab = 71;
constexpr std::size_t BS_55AA = 510;
constexpr std::size_t MBR_Table = 446;

constexpr std::size_t kDirEntrySize = 32;

std::uint16_t ld_word(const std::uint8_t* p) noexcept
{
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

std::uint32_t ld_dword(const std::uint8_t* p) noexcept
{
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::string short_name(const std::uint8_t* e)
{
    std::string base(reinterpret_cast<const char*>(e), 8);
    std::string ext(reinterpret_cast<const char*>(e + 8), 3);
    if (static_cast<std::uint8_t>(base[0]) == 0x05) {
        base[0] = static_cast<char>(0xE5); // escaped lead byte
    }
    base.erase(base.find_last_not_of(' ') + 1);
    ext.erase(ext.find_last_not_of(' ') + 1);
    return ext.empty() ? base : base + "." + ext;
}

std::vector<std::string> split_path(std::string_view path)
{
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        const std::size_t j = path.find('/', i);
        const std::string_view part = path.substr(i, j == std::string_view::npos ? path.npos : j - i);
        if (!part.empty()) {
            parts.push_back(text::to_upper(part));
        }
        if (j == std::string_view::npos) {
            break;
        }
        i = j + 1;
    }
    return parts;
}

} // namespace

std::string DirEntry::extension() const
{
    const auto dot = name.rfind('.');
    return dot == std::string::npos ? std::string{} : name.substr(dot + 1);
}

Mbr Mbr::parse(const Sector& s)
{
    Mbr m;
    m.signature = ld_word(&s[BS_55AA]);
    for (std::size_t i = 0; i < 4; ++i) {
        const std::uint8_t* p = &s[MBR_Table + 16 * i];
        m.partitions[i] = {p[0], p[4], ld_dword(p + 8), ld_dword(p + 12)};
    }
    return m;
}

Volume Volume::mount(BlockDevice& device)
{
    const Sector s0 = device.read_sector(0);
    const Mbr mbr = Mbr::parse(s0);
    if (!mbr.valid()) {
        throw FatError(FatErrc::DiskError, "sector 0 lacks the 0xAA55 boot signature");
    }
    const auto part = std::find_if(mbr.partitions.begin(), mbr.partitions.end(),
                                   [](const PartitionEntry& p) { return p.is_fat32() && p.sector_count != 0; });
    if (part == mbr.partitions.end()) {
        throw FatError(FatErrc::NoFatPartition, "no FAT32 partition in the MBR");
    }

    const Sector b = device.read_sector(part->start_lba);
    if (ld_word(&b[BS_55AA]) != kBootSignature) {
        throw FatError(FatErrc::BadBpb, "volume boot record lacks the 0xAA55 signature");
    }

    Geometry g;
    g.partition_start_lba = part->start_lba;
    g.partition_sectors = part->sector_count;
    g.bytes_per_sector = ld_word(&b[BPB_BytsPerSec]);
    g.sectors_per_cluster = b[BPB_SecPerClus];
    g.reserved_sectors = ld_word(&b[BPB_RsvdSecCnt]);
    g.fat_count = b[BPB_NumFATs];
    g.fat_size_sectors = ld_dword(&b[BPB_FATSz32]);
    g.root_dir_cluster = ld_dword(&b[BPB_RootClus]);
    g.volume_id = ld_dword(&b[BS_VolID]);
    g.label.assign(reinterpret_cast<const char*>(&b[BS_VolLab]), 11);
    g.label.erase(g.label.find_last_not_of(' ') + 1);

    const std::uint32_t spc = g.sectors_per_cluster;
    if (g.bytes_per_sector != kSectorSize) {
        throw FatError(FatErrc::BadBpb, "bytes per sector is " + std::to_string(g.bytes_per_sector));
    }
    if (spc == 0 || (spc & (spc - 1)) != 0) {
        throw FatError(FatErrc::BadBpb, "sectors per cluster is not a power of two");
    }
    if (g.reserved_sectors == 0 || g.fat_count == 0) {
        throw FatError(FatErrc::BadBpb, "reserved sector or FAT count is zero");
    }
    if (ld_word(&b[BPB_RootEntCnt]) != 0 || ld_word(&b[BPB_FATSz16]) != 0 || ld_word(&b[BPB_TotSec16]) != 0 ||
        g.fat_size_sectors == 0) {
        throw FatError(FatErrc::BadBpb, "BPB is not FAT32");
    }

    const std::uint32_t total_sectors = ld_dword(&b[BPB_TotSec32]);
    const std::uint64_t meta = std::uint64_t{g.reserved_sectors} + std::uint64_t{g.fat_count} * g.fat_size_sectors;
    if (total_sectors <= meta) {
        throw FatError(FatErrc::BadBpb, "FAT region exceeds the volume");
    }
    g.fat_start_lba = g.partition_start_lba + g.reserved_sectors;
    g.data_start_lba = static_cast<std::uint32_t>(g.partition_start_lba + meta);
    g.total_clusters = static_cast<std::uint32_t>((total_sectors - meta) / spc);
    if (g.total_clusters < kMinFat32Clusters) {
        throw FatError(FatErrc::BadBpb, std::to_string(g.total_clusters) + " clusters is below the FAT32 minimum");
    }
    if (std::uint64_t{g.total_clusters} + 2 > std::uint64_t{g.fat_size_sectors} * (kSectorSize / 4)) {
        throw FatError(FatErrc::BadBpb, "FAT too small for the cluster count");
    }
    if (g.root_dir_cluster < 2 || g.root_dir_cluster >= g.total_clusters + 2) {
        throw FatError(FatErrc::BadBpb, "root directory cluster out of range");
    }
    return Volume(device, std::move(g));
}

std::uint32_t Volume::cluster_lba(std::uint32_t cluster) const
{
    if (cluster < 2 || cluster >= m_geo.total_clusters + 2) {
        throw FatError(FatErrc::ChainError, "cluster " + std::to_string(cluster) + " out of range");
    }
    return m_geo.data_start_lba + (cluster - 2) * m_geo.sectors_per_cluster;
}

const Sector& Volume::fat_sector(std::uint32_t lba) const
{
    if (m_fat_lba != lba) {
        m_fat_buf = m_device->read_sector(lba);
        m_fat_lba = lba;
    }
    return m_fat_buf;
}

std::optional<std::uint32_t> Volume::next_cluster(std::uint32_t cluster) const
{
    if (cluster < 2 || cluster >= m_geo.total_clusters + 2) {
        throw FatError(FatErrc::ChainError, "cluster " + std::to_string(cluster) + " out of range");
    }
    const std::uint32_t byte = cluster * 4;
    const Sector& s = fat_sector(m_geo.fat_start_lba + byte / kSectorSize);
    const std::uint32_t next = ld_dword(&s[byte % kSectorSize]) & 0x0FFFFFFF;
    if (next >= kEndOfChain) {
        return std::nullopt;
    }
    if (next == 0) {
        throw FatError(FatErrc::ChainError, "cluster " + std::to_string(cluster) + " is marked free");
    }
    if (next == kBadCluster) {
        throw FatError(FatErrc::ChainError, "cluster " + std::to_string(cluster) + " links to a bad cluster");
    }
    if (next < 2 || next >= m_geo.total_clusters + 2) {
        throw FatError(FatErrc::ChainError, "FAT entry " + std::to_string(next) + " out of range");
    }
    return next;
}

std::vector<std::uint32_t> Volume::cluster_chain(std::uint32_t first) const
{
    std::vector<std::uint32_t> chain;
    std::optional<std::uint32_t> c = first;
    while (c) {
        if (chain.size() > m_geo.total_clusters) {
            throw FatError(FatErrc::ChainError, "cluster chain loops");
        }
        chain.push_back(*c);
        c = next_cluster(*c);
    }
    return chain;
}

std::vector<DirEntry> Volume::read_dir(std::uint32_t cluster) const
{
    std::vector<DirEntry> out;
    std::size_t clusters_seen = 0;
    std::optional<std::uint32_t> c = cluster;
    while (c) {
        if (++clusters_seen > m_geo.total_clusters) {
            throw FatError(FatErrc::ChainError, "directory chain loops");
        }
        const std::uint32_t lba = cluster_lba(*c);
        for (std::uint32_t s = 0; s < m_geo.sectors_per_cluster; ++s) {
            const Sector sec = m_device->read_sector(lba + s);
            for (std::size_t off = 0; off < kSectorSize; off += kDirEntrySize) {
                const std::uint8_t* e = &sec[off];
                if (e[0] == 0x00) {
                    return out; // end of directory
                }
                const std::uint8_t a = e[11];
                if (e[0] == 0xE5 || (a & attr::LongName) == attr::LongName || (a & attr::VolumeId)) {
                    continue;
                }
                DirEntry d;
                d.name = short_name(e);
                if (d.name == "." || d.name == "..") {
                    continue;
                }
                d.attributes = a;
                d.first_cluster = std::uint32_t{ld_word(e + 20)} << 16 | ld_word(e + 26);
                d.size = ld_dword(e + 28);
                out.push_back(std::move(d));
            }
        }
        c = next_cluster(*c);
    }
    return out;
}

DirEntry Volume::root_entry() const
{
    DirEntry root;
    root.name = "/";
    root.attributes = attr::Directory;
    root.first_cluster = m_geo.root_dir_cluster;
    return root;
}

DirEntry Volume::stat(std::string_view path) const
{
    DirEntry cur = root_entry();
    for (const std::string& part : split_path(path)) {
        if (!cur.is_directory()) {
            throw FatError(FatErrc::NotADirectory, cur.name + " is not a directory");
        }
        const std::uint32_t cl = cur.first_cluster == 0 ? m_geo.root_dir_cluster : cur.first_cluster;
        const auto entries = read_dir(cl);
        const auto it = std::find_if(entries.begin(), entries.end(),
                                     [&](const DirEntry& e) { return text::to_upper(e.name) == part; });
        if (it == entries.end()) {
            throw FatError(FatErrc::NotFound, "no such file: " + std::string(path));
        }
        cur = *it;
    }
    return cur;
}

std::vector<DirEntry> Volume::list_dir(std::string_view path) const
{
    const DirEntry d = stat(path);
    if (!d.is_directory()) {
        throw FatError(FatErrc::NotADirectory, std::string(path) + " is not a directory");
    }
    return read_dir(d.first_cluster == 0 ? m_geo.root_dir_cluster : d.first_cluster);
}

FileHandle Volume::open(std::string_view path) const
{
    DirEntry d = stat(path);
    if (d.is_directory()) {
        throw FatError(FatErrc::IsDirectory, std::string(path) + " is a directory");
    }
    return FileHandle(*this, std::move(d));
}

FileHandle::FileHandle(Volume volume, DirEntry entry)
    : m_volume(std::move(volume)), m_entry(std::move(entry)), m_cluster(m_entry.first_cluster)
{
    if (m_entry.size > 0 && m_entry.first_cluster < 2) {
        throw FatError(FatErrc::ChainError, m_entry.name + " has data but no first cluster");
    }
}

void FileHandle::check_open() const
{
    if (!m_open) {
        throw FatError(FatErrc::ClosedHandle, "file handle is closed");
    }
}

void FileHandle::close()
{
    check_open();
    m_open = false;
}

std::vector<std::uint8_t> FileHandle::read(std::size_t n)
{
    check_open();
    const std::size_t want = std::min<std::size_t>(n, m_entry.size - m_offset);
    std::vector<std::uint8_t> out;
    out.reserve(want);

    const std::uint32_t cbytes = m_volume.cluster_bytes();
    while (out.size() < want) {
        const std::uint32_t index = m_offset / cbytes;
        while (m_cluster_index < index) {
            const auto next = m_volume.next_cluster(m_cluster);
            if (!next) {
                throw FatError(FatErrc::ChainError, m_entry.name + ": chain ends before file size");
            }
            m_cluster = *next;
            ++m_cluster_index;
        }
        const std::uint32_t in_cluster = m_offset % cbytes;
        const std::uint32_t lba = m_volume.cluster_lba(m_cluster) + in_cluster / kSectorSize;
        if (m_buf_lba != lba) {
            m_buf = m_volume.device().read_sector(lba);
            m_buf_lba = lba;
        }
        const std::size_t at = in_cluster % kSectorSize;
        const std::size_t take = std::min(kSectorSize - at, want - out.size());
        out.insert(out.end(), m_buf.begin() + static_cast<std::ptrdiff_t>(at),
                   m_buf.begin() + static_cast<std::ptrdiff_t>(at + take));
        m_offset += static_cast<std::uint32_t>(take);
    }
    return out;
}

} // namespace pnp::fat
