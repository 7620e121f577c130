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
#include "pnp/cli.hpp"

#include "fixture.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace pnp::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args, const std::string& input = {})
{
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = run_cli(args, in, out, err);
    return {code, out.str(), err.str()};
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    f << text;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        dir = testsupport::scratch_dir("cli");
        const auto& bytes = testsupport::card_bytes();
        std::ofstream f(dir / "card.img", std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    std::string image() const { return (dir / "card.img").string(); }
    std::string config(const std::string& name) const { return std::string(PNP_CONFIG_DIR) + "/" + name; }

    static fs::path dir;
};

fs::path Cli::dir;

std::vector<std::string> lines_of(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string l;
    while (std::getline(in, l)) {
        out.push_back(l);
    }
    return out;
}

} // namespace

TEST_F(Cli, UsageErrors)
{
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"ir-gen"}).code, kExitUsage);
    EXPECT_EQ(run({"simulate", "--image", image()}).code, kExitUsage);
    EXPECT_EQ(run({"simulate", "--image", image(), "--script", "x", "--interactive"}).code, kExitUsage);
    EXPECT_EQ(run({"simulate", "--image", image(), "--interactive", "--trace", "cpu"}).code, kExitUsage);
    EXPECT_EQ(run({"ir-decode", "--capture", "x", "--tolerance", "0.9"}).code, kExitUsage);
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, kExitOk);
    EXPECT_NE(help.out.find("sd-inspect"), std::string::npos);
}

TEST_F(Cli, IrGenDecodeRoundTrip)
{
    const std::string cap = (dir / "a.cap").string();
    ASSERT_EQ(run({"ir-gen", "--button", "A", "--out", cap}).code, kExitOk);
    const auto r = run({"ir-decode", "--capture", cap});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out, "frame addr=10 cmd=46\n");
    // A different accepted address turns the same frame into garbage.
    const auto other = run({"ir-decode", "--capture", cap, "--address", "0x20"});
    EXPECT_EQ(other.out, "garbage wrong-address\n");
}

TEST_F(Cli, HeldButtonGivesRepeats)
{
    const auto gen = run({"ir-gen", "--button", "down", "--hold", "500"});
    ASSERT_EQ(gen.code, kExitOk);
    const std::string cap = (dir / "hold.cap").string();
    write_file(cap, gen.out);
    const auto r = run({"ir-decode", "--capture", cap});
    EXPECT_EQ(lines_of(r.out),
              (std::vector<std::string>{"frame addr=10 cmd=19", "repeat", "repeat", "repeat", "repeat"}));
}

TEST_F(Cli, IrGenErrors)
{
    EXPECT_EQ(run({"ir-gen", "--button", "Z"}).code, kExitUsage);
    EXPECT_EQ(run({"ir-gen", "--button", "A", "--address", "0x100"}).code, kExitUsage);
    EXPECT_EQ(run({"ir-gen", "--button", "A", "--mapping", (dir / "nope.map").string()}).code, kExitNotFound);
    const std::string map = (dir / "custom.map").string();
    write_file(map, "0x22=A\n");
    EXPECT_EQ(run({"ir-gen", "--button", "B", "--mapping", map}).code, kExitUsage);
    const std::string cap = (dir / "custom.cap").string();
    ASSERT_EQ(run({"ir-gen", "--button", "A", "--mapping", map, "--out", cap}).code, kExitOk);
    EXPECT_EQ(run({"ir-decode", "--capture", cap}).out, "frame addr=10 cmd=22\n");
    write_file(map, "garbage line\n");
    EXPECT_EQ(run({"ir-gen", "--button", "A", "--mapping", map}).code, kExitUsage);
    EXPECT_EQ(run({"ir-gen", "--button", "A", "--mapping", config("remote.map")}).code, kExitOk);
}

TEST_F(Cli, IrDecodeErrors)
{
    EXPECT_EQ(run({"ir-decode", "--capture", (dir / "missing.cap").string()}).code, kExitNotFound);
    const std::string cap = (dir / "bad.cap").string();
    write_file(cap, "this is not a capture\n");
    EXPECT_EQ(run({"ir-decode", "--capture", cap}).code, kExitUsage);
}

TEST_F(Cli, SdInspectMatchesOfflineGeometry)
{
    const auto r = run({"sd-inspect", "--image", image()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    for (const auto& [key, value] : testsupport::geometry()) {
        const std::string line = key + "=" + std::to_string(value) + "\n";
        if (key == "volume_id") {
            continue;
        }
        EXPECT_NE(r.out.find(line), std::string::npos) << line;
    }
    EXPECT_NE(r.out.find("mbr: valid\n"), std::string::npos);
    EXPECT_NE(r.out.find(" fat32\n"), std::string::npos);
    EXPECT_NE(r.out.find("      BOOK.TXT 416\n"), std::string::npos);
    EXPECT_NE(r.out.find("<DIR> MUSIC\n"), std::string::npos);
}

TEST_F(Cli, SdInspectReportsBadSignature)
{
    auto bytes = testsupport::card_bytes();
    bytes[510] = 0;
    bytes[511] = 0;
    const fs::path bad = dir / "nosig.img";
    {
        std::ofstream f(bad, std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    const auto r = run({"sd-inspect", "--image", bad.string()});
    EXPECT_EQ(r.code, kExitDisk);
    EXPECT_NE(r.err.find("mbr-signature-invalid"), std::string::npos);
    EXPECT_NE(r.out.find("mbr: signature=0x0000"), std::string::npos);
    EXPECT_EQ(run({"fs-cat", "--image", bad.string(), "--path", "/BOOK.TXT"}).code, kExitDisk);
    EXPECT_EQ(run({"sd-inspect", "--image", (dir / "absent.img").string()}).code, kExitNotFound);
}

TEST_F(Cli, FsCatReproducesManifest)
{
    for (const auto& m : testsupport::manifest()) {
        const auto r = run({"fs-cat", "--image", image(), "--path", m.path});
        ASSERT_EQ(r.code, kExitOk) << m.path << ": " << r.err;
        EXPECT_EQ(r.out.size(), m.size) << m.path;
        const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(r.out.data()),
                                                  r.out.size());
        EXPECT_EQ(testsupport::sha256_hex(bytes), m.sha256) << m.path;
    }
}

TEST_F(Cli, FsCatLookupErrors)
{
    EXPECT_EQ(run({"fs-cat", "--image", image(), "--path", "/NOPE.TXT"}).code, kExitNotFound);
    EXPECT_EQ(run({"fs-cat", "--image", image(), "--path", "/MUSIC"}).code, kExitNotFound);
    EXPECT_EQ(run({"fs-cat", "--image", image(), "--path", "/BOOK.TXT/X"}).code, kExitNotFound);
}

TEST_F(Cli, SimulateScriptIsReproducible)
{
    const std::vector<std::string> args = {"simulate", "--image", image(), "--script", config("demo.script")};
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.code, kExitOk) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '='), std::count(b.out.begin(), b.out.end(), '='));

    const std::string snap = (dir / "snap.txt").string();
    auto with_file = args;
    with_file.insert(with_file.end(), {"--snapshot-out", snap});
    const auto c = run(with_file);
    EXPECT_EQ(c.code, kExitOk);
    EXPECT_TRUE(c.out.empty());
    EXPECT_EQ(testsupport::read_text_file(snap), a.out);
}

TEST_F(Cli, SimulateOptionsAndFailures)
{
    const std::string script = (dir / "s.script").string();
    write_file(script, "t=50 press A\nt=120 snapshot\n");
    const auto traced = run({"simulate", "--image", image(), "--script", script, "--trace", "bus"});
    EXPECT_EQ(traced.code, kExitOk);
    EXPECT_GT(std::count(traced.err.begin(), traced.err.end(), '\n'), 100);

    const auto cfg = run({"simulate", "--image", image(), "--script", script, "--codec-config", config("codec.conf")});
    EXPECT_EQ(cfg.code, kExitOk);

    // A codec strapped for another SPI mode fails its sanity check at boot.
    const std::string mode0 = (dir / "mode0.conf").string();
    write_file(mode0, "spi_mode=0\n");
    const auto bad_mode = run({"simulate", "--image", image(), "--script", script, "--codec-config", mode0});
    EXPECT_EQ(bad_mode.code, kExitSimulation);
    EXPECT_NE(bad_mode.err.find("codec"), std::string::npos);

    write_file(mode0, "spi_mode=\n");
    EXPECT_EQ(run({"simulate", "--image", image(), "--script", script, "--codec-config", mode0}).code, kExitUsage);

    write_file(script, "t=50 push A\n");
    const auto bad_script = run({"simulate", "--image", image(), "--script", script});
    EXPECT_EQ(bad_script.code, kExitUsage);
    EXPECT_NE(bad_script.err.find("line 1"), std::string::npos);
    EXPECT_EQ(run({"simulate", "--image", image(), "--script", (dir / "none").string()}).code, kExitNotFound);

    const std::string map = (dir / "partial.map").string();
    write_file(map, "0x46=A\n");
    write_file(script, "t=50 press B\n");
    EXPECT_EQ(run({"simulate", "--image", image(), "--script", script, "--mapping", map}).code, kExitUsage);
}

TEST_F(Cli, SimulateInteractiveReadsKeys)
{
    const auto r = run({"simulate", "--image", image(), "--interactive"}, "a\x1b[Aq");
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("[A] "), std::string::npos);
    EXPECT_NE(r.out.find("[UP] "), std::string::npos);
    EXPECT_NE(r.out.find("Vol 13"), std::string::npos);
}
