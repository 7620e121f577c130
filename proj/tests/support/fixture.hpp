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
    Shared test helpers: the gzip card fixture, its manifest and chain
    listings, and a standalone SHA-256 used as the content oracle.
*/
#pragma once

#include "pnp/block_device.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace testsupport {

std::filesystem::path fixture_dir();

// Decompressed card.img.gz, cached after the first call.
const std::vector<std::uint8_t>& card_bytes();
pnp::DiskImage card_image();

struct ManifestEntry {
    std::string path;
    std::uint64_t size = 0;
    std::string sha256;
};
std::vector<ManifestEntry> manifest();

// path -> cluster chain from card.chains
std::map<std::string, std::vector<std::uint32_t>> chains();

// key=value lines from card.geometry
std::map<std::string, std::uint64_t> geometry();

std::string sha256_hex(std::span<const std::uint8_t> data);

std::string read_text_file(const std::filesystem::path& p);

// Fresh scratch directory under the build tree.
std::filesystem::path scratch_dir(const std::string& name);

} // namespace testsupport
