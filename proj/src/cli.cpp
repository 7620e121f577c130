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

#include "pnp/sim.hpp"
#include "text_util.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pnp::cli {

namespace {

// Thrown inside a subcommand to leave with a specific exit status.
struct Exit {
    int code;
};

[[noreturn]] void fail(std::ostream& err, int code, const std::string& message)
{
    err << "playnport: " << message << "\n";
    throw Exit{code};
}

std::ifstream open_input(std::ostream& err, const std::string& path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in) {
        fail(err, kExitNotFound, "cannot open " + path);
    }
    return in;
}

DiskImage load_image(std::ostream& err, const std::string& path)
{
    if (!std::filesystem::exists(path)) {
        fail(err, kExitNotFound, "no such image " + path);
    }
    try {
        return DiskImage::load(path);
    } catch (const ImageError& e) {
        fail(err, kExitDisk, e.what());
    }
}

ir::ButtonMap load_mapping(std::ostream& err, const std::string& path)
{
    if (path.empty()) {
        return ir::ButtonMap::defaults();
    }
    auto in = open_input(err, path);
    try {
        return ir::ButtonMap::parse(in);
    } catch (const ir::MappingError& e) {
        fail(err, kExitUsage, e.what());
    }
}

std::string hex2(unsigned v)
{
    char buf[4];
    std::snprintf(buf, sizeof buf, "%02X", v & 0xFFu);
    return buf;
}

std::string hex8(std::uint32_t v)
{
    char buf[12];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

int fat_exit(const fat::FatError& e)
{
    switch (e.code()) {
    case fat::FatErrc::NotFound:
    case fat::FatErrc::NotADirectory:
    case fat::FatErrc::IsDirectory: return kExitNotFound;
    default: return kExitDisk;
    }
}

// ---------------------------------------------------------------------------

struct IrDecodeArgs {
    std::string capture;
    double tolerance = 0.20;
    std::string address = "0x10";
};

int cmd_ir_decode(const IrDecodeArgs& a, std::ostream& out, std::ostream& err)
{
    const auto addr = text::parse_number(a.address);
    if (!addr || *addr > 0xFF) {
        fail(err, kExitUsage, "bad address " + a.address);
    }
    auto in = open_input(err, a.capture);
    ir::PulseTrain train;
    try {
        train = ir::read_capture(in);
    } catch (const ir::PulseTrainError& e) {
        fail(err, kExitUsage, e.what());
    }
    ir::NecTimings t;
    t.tolerance = a.tolerance;
    for (const ir::IrEvent& ev : ir::decode_stream(train, t, static_cast<std::uint8_t>(*addr))) {
        if (const auto* f = std::get_if<ir::IrFrame>(&ev)) {
            out << "frame addr=" << hex2(f->address) << " cmd=" << hex2(f->command) << "\n";
        } else if (std::holds_alternative<ir::Repeat>(ev)) {
            out << "repeat\n";
        } else {
            out << "garbage " << std::get<ir::Garbage>(ev).reason << "\n";
        }
    }
    return kExitOk;
}

struct IrGenArgs {
    std::string button;
    std::string mapping;
    unsigned hold_ms = 0;
    std::string out;
    std::string address = "0x10";
};

int cmd_ir_gen(const IrGenArgs& a, std::ostream& out, std::ostream& err)
{
    const auto addr = text::parse_number(a.address);
    if (!addr || *addr > 0xFF) {
        fail(err, kExitUsage, "bad address " + a.address);
    }
    const auto button = ir::parse_button(a.button);
    if (!button) {
        fail(err, kExitUsage, "unknown button " + a.button);
    }
    const ir::ButtonMap map = load_mapping(err, a.mapping);
    const auto cmd = map.command_for(*button);
    if (!cmd) {
        fail(err, kExitUsage, "button " + a.button + " is not in the mapping");
    }
    const ir::PulseTrain train =
        ir::encode_hold(static_cast<std::uint8_t>(*addr), *cmd, static_cast<Micros>(a.hold_ms) * kMillis);
    if (a.out.empty()) {
        ir::write_capture(out, train);
    } else {
        std::ofstream f(a.out);
        if (!f) {
            fail(err, kExitNotFound, "cannot write " + a.out);
        }
        ir::write_capture(f, train);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_sd_inspect(const std::string& path, std::ostream& out, std::ostream& err)
{
    DiskImage image = load_image(err, path);
    sim::CardStack stack(image);
    try {
        stack.host.disk_initialize();
        const fat::Mbr mbr = fat::Mbr::parse(stack.device.read_sector(0));
        out << "card: sectors=" << stack.host.card_sector_count() << "\n";
        if (!mbr.valid()) {
            out << "mbr: signature=0x" << hex2(mbr.signature >> 8) << hex2(mbr.signature) << "\n";
            fail(err, kExitDisk, "mbr-signature-invalid");
        }
        out << "mbr: valid\n";
        for (std::size_t i = 0; i < mbr.partitions.size(); ++i) {
            const auto& p = mbr.partitions[i];
            if (p.type == 0) {
                continue;
            }
            out << "partition " << i << ": type=0x" << hex2(p.type) << " status=0x" << hex2(p.status)
                << " start_lba=" << p.start_lba << " sectors=" << p.sector_count << (p.is_fat32() ? " fat32" : "")
                << "\n";
        }
        const fat::Volume vol = fat::Volume::mount(stack.device);
        const fat::Geometry& g = vol.geometry();
        out << "partition_start_lba=" << g.partition_start_lba << "\n"
            << "partition_sectors=" << g.partition_sectors << "\n"
            << "bytes_per_sector=" << g.bytes_per_sector << "\n"
            << "sectors_per_cluster=" << g.sectors_per_cluster << "\n"
            << "reserved_sectors=" << g.reserved_sectors << "\n"
            << "fat_count=" << g.fat_count << "\n"
            << "fat_size_sectors=" << g.fat_size_sectors << "\n"
            << "root_dir_cluster=" << g.root_dir_cluster << "\n"
            << "fat_start_lba=" << g.fat_start_lba << "\n"
            << "data_start_lba=" << g.data_start_lba << "\n"
            << "total_clusters=" << g.total_clusters << "\n"
            << "volume_id=" << hex8(g.volume_id) << "\n"
            << "label=" << g.label << "\n";
        out << "root:\n";
        for (const fat::DirEntry& e : vol.list_dir("/")) {
            out << "  " << (e.is_directory() ? "<DIR> " : "      ") << e.name;
            if (!e.is_directory()) {
                out << " " << e.size;
            }
            out << "\n";
        }
    } catch (const fat::FatError& e) {
        fail(err, kExitDisk, std::string("mount failed: ") + e.what() + " (code " + std::to_string(e.value()) + ")");
    } catch (const sd::SdError& e) {
        fail(err, kExitDisk, std::string("card error: ") + e.what());
    }
    return kExitOk;
}

int cmd_fs_cat(const std::string& image_path, const std::string& path, std::ostream& out, std::ostream& err)
{
    DiskImage image = load_image(err, image_path);
    sim::CardStack stack(image);
    try {
        stack.host.disk_initialize();
        const fat::Volume vol = fat::Volume::mount(stack.device);
        fat::FileHandle f = vol.open(path);
        while (!f.eof()) {
            const auto chunk = f.read(4096);
            out.write(reinterpret_cast<const char*>(chunk.data()), static_cast<std::streamsize>(chunk.size()));
        }
        f.close();
    } catch (const fat::FatError& e) {
        fail(err, fat_exit(e), std::string(e.what()) + " (code " + std::to_string(e.value()) + ")");
    } catch (const sd::SdError& e) {
        fail(err, kExitDisk, std::string("card error: ") + e.what());
    }
    out.flush();
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string image;
    std::string script;
    bool interactive = false;
    std::string snapshot_out;
    std::vector<std::string> trace;
    std::string codec_config;
    std::string mapping;
};

int cmd_simulate(const SimulateArgs& a, std::istream& in, std::ostream& out, std::ostream& err)
{
    std::vector<sim::ScriptEvent> events;
    if (!a.interactive) {
        auto script = open_input(err, a.script);
        try {
            events = sim::parse_script(script);
        } catch (const sim::ScriptError& e) {
            fail(err, kExitUsage, e.what());
        }
    }
    sim::BoardOptions opts;
    opts.buttons = load_mapping(err, a.mapping);
    if (!a.codec_config.empty()) {
        auto cfg = open_input(err, a.codec_config);
        try {
            opts.codec = codec::CodecConfig::parse(cfg);
        } catch (const codec::CodecConfigError& e) {
            fail(err, kExitUsage, e.what());
        }
    }

    sim::Board board(load_image(err, a.image), opts);
    for (const std::string& t : a.trace) {
        if (t == "bus") {
            board.set_bus_trace([&err](const std::string& line) { err << line << "\n"; });
        }
    }

    try {
        if (a.interactive) {
            sim::run_interactive(board, in, out);
            return board.monitors().ok() ? kExitOk : kExitSimulation;
        }
        const sim::ScriptRun run = sim::run_script(board, events);
        if (a.snapshot_out.empty()) {
            out << run.snapshots;
        } else {
            std::ofstream f(a.snapshot_out, std::ios::binary);
            if (!f) {
                fail(err, kExitNotFound, "cannot write " + a.snapshot_out);
            }
            f << run.snapshots;
        }
        if (!run.monitors.ok()) {
            for (const auto& v : run.monitors.violations) {
                err << "monitor: " << v << "\n";
            }
            return kExitSimulation;
        }
    } catch (const ir::MappingError& e) {
        fail(err, kExitUsage, e.what());
    } catch (const fat::FatError& e) {
        fail(err, kExitDisk, std::string("mount failed: ") + e.what() + " (code " + std::to_string(e.value()) + ")");
    } catch (const sd::SdError& e) {
        fail(err, kExitDisk, std::string("card error: ") + e.what());
    } catch (const codec::CodecError& e) {
        fail(err, kExitSimulation, std::string("codec: ") + e.what());
    } catch (const SchedulingError& e) {
        fail(err, kExitSimulation, std::string("scheduler: ") + e.what());
    }
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"PlayNPort board simulator and tools", "playnport"};
    app.require_subcommand(1);

    IrDecodeArgs dec;
    auto* ir_decode = app.add_subcommand("ir-decode", "Decode an IR capture file");
    ir_decode->add_option("--capture", dec.capture, "Capture file")->required();
    ir_decode->add_option("--tolerance", dec.tolerance, "Timing tolerance")->check(CLI::Range(0.0, 0.5));
    ir_decode->add_option("--address", dec.address, "Accepted remote address");

    IrGenArgs gen;
    auto* ir_gen = app.add_subcommand("ir-gen", "Write the IR capture of a button press");
    ir_gen->add_option("--button", gen.button, "Button name")->required();
    ir_gen->add_option("--mapping", gen.mapping, "Command to button mapping file");
    ir_gen->add_option("--hold", gen.hold_ms, "Hold time in ms");
    ir_gen->add_option("--out", gen.out, "Output capture file");
    ir_gen->add_option("--address", gen.address, "Remote address");

    std::string inspect_image;
    auto* sd_inspect = app.add_subcommand("sd-inspect", "Report MBR, FAT geometry and root directory");
    sd_inspect->add_option("--image", inspect_image, "Card image")->required();

    std::string cat_image, cat_path;
    auto* fs_cat = app.add_subcommand("fs-cat", "Copy a file from the card image to standard output");
    fs_cat->add_option("--image", cat_image, "Card image")->required();
    fs_cat->add_option("--path", cat_path, "File path on the card")->required();

    SimulateArgs simargs;
    auto* simulate = app.add_subcommand("simulate", "Run the player on a card image");
    simulate->add_option("--image", simargs.image, "Card image")->required();
    auto* script_opt = simulate->add_option("--script", simargs.script, "Event script");
    auto* inter_opt = simulate->add_flag("--interactive", simargs.interactive, "Drive the remote from the keyboard");
    script_opt->excludes(inter_opt);
    simulate->add_option("--snapshot-out", simargs.snapshot_out, "Snapshot output file");
    simulate->add_option("--trace", simargs.trace, "Trace channels")->check(CLI::IsMember({"bus"}));
    simulate->add_option("--codec-config", simargs.codec_config, "Codec configuration file");
    simulate->add_option("--mapping", simargs.mapping, "Command to button mapping file");

    try {
        app.parse(argc, argv);
        if (simulate->parsed() && simargs.script.empty() && !simargs.interactive) {
            throw CLI::RequiredError("--script or --interactive");
        }
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ir_decode->parsed()) {
            return cmd_ir_decode(dec, out, err);
        }
        if (ir_gen->parsed()) {
            return cmd_ir_gen(gen, out, err);
        }
        if (sd_inspect->parsed()) {
            return cmd_sd_inspect(inspect_image, out, err);
        }
        if (fs_cat->parsed()) {
            return cmd_fs_cat(cat_image, cat_path, out, err);
        }
        return cmd_simulate(simargs, in, out, err);
    } catch (const Exit& e) {
        return e.code;
    }
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err)
{
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("playnport");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
}

} // namespace pnp::cli
