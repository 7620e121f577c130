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
#include "fixture.hpp"

#include <zlib.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace testsupport {

std::filesystem::path fixture_dir()
{
    return PNP_FIXTURE_DIR;
}

const std::vector<std::uint8_t>& card_bytes()
{
    static const std::vector<std::uint8_t> bytes = [] {
        const std::string path = (fixture_dir() / "card.img.gz").string();
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) {
            throw std::runtime_error("cannot open " + path);
        }
        std::vector<std::uint8_t> out;
        std::array<std::uint8_t, 65536> buf;
        int n;
        while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
            out.insert(out.end(), buf.begin(), buf.begin() + n);
        }
        gzclose(f);
        if (n < 0) {
            throw std::runtime_error("corrupt gzip " + path);
        }
        return out;
    }();
    return bytes;
}

pnp::DiskImage card_image()
{
    return pnp::DiskImage(card_bytes());
}

std::vector<ManifestEntry> manifest()
{
    std::ifstream in(fixture_dir() / "card.manifest");
    std::vector<ManifestEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream s(line);
        ManifestEntry e;
        std::string size;
        std::getline(s, e.path, ',');
        std::getline(s, size, ',');
        std::getline(s, e.sha256);
        e.size = std::stoull(size);
        out.push_back(e);
    }
    return out;
}

std::map<std::string, std::vector<std::uint32_t>> chains()
{
    std::ifstream in(fixture_dir() / "card.chains");
    std::map<std::string, std::vector<std::uint32_t>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto comma = line.find(',');
        std::istringstream s(line.substr(comma + 1));
        std::string c;
        auto& chain = out[line.substr(0, comma)];
        while (std::getline(s, c, ':')) {
            chain.push_back(static_cast<std::uint32_t>(std::stoul(c)));
        }
    }
    return out;
}

std::map<std::string, std::uint64_t> geometry()
{
    std::ifstream in(fixture_dir() / "card.geometry");
    std::map<std::string, std::uint64_t> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (line.empty() || line[0] == '#' || eq == std::string::npos) {
            continue;
        }
        out[line.substr(0, eq)] = std::stoull(line.substr(eq + 1), nullptr, 0);
    }
    return out;
}

// FIPS 180-4, written out plainly so it shares nothing with the code under test.
std::string sha256_hex(std::span<const std::uint8_t> data)
{
    static constexpr std::array<std::uint32_t, 64> k = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
        0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
        0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
        0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
        0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                      0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    auto rotr = [](std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); };

    std::vector<std::uint8_t> msg(data.begin(), data.end());
    const std::uint64_t bits = static_cast<std::uint64_t>(data.size()) * 8;
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) {
        msg.push_back(0);
    }
    for (int i = 7; i >= 0; --i) {
        msg.push_back(static_cast<std::uint8_t>(bits >> (i * 8)));
    }

    for (std::size_t off = 0; off < msg.size(); off += 64) {
        std::array<std::uint32_t, 64> w{};
        for (int i = 0; i < 16; ++i) {
            w[i] = std::uint32_t{msg[off + 4 * i]} << 24 | std::uint32_t{msg[off + 4 * i + 1]} << 16 |
                   std::uint32_t{msg[off + 4 * i + 2]} << 8 | std::uint32_t{msg[off + 4 * i + 3]};
        }
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, hh] = h;
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + S1 + ch + k[i] + w[i];
            const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = S0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }
    std::string hex;
    char buf[9];
    for (std::uint32_t v : h) {
        std::snprintf(buf, sizeof buf, "%08x", v);
        hex += buf;
    }
    return hex;
}

std::string read_text_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::path(PNP_SCRATCH_DIR) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testsupport
