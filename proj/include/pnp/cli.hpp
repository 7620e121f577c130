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
    playnport command line: ir-decode, ir-gen, sd-inspect, fs-cat and
    simulate. Kept in the library so tests can drive it with string streams.
*/
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pnp::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitDisk = 3,
    kExitNotFound = 4,
    kExitSimulation = 5,
};

// `in` feeds interactive keystrokes; binary payloads go to `out`.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace pnp::cli
