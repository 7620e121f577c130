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

#include <cstring>
#include <iostream>

#include <termios.h>
#include <unistd.h>

namespace {

// Raw keyboard for interactive mode so keys arrive without Enter.
class RawTerminal {
public:
    RawTerminal()
    {
        if (!isatty(STDIN_FILENO) || tcgetattr(STDIN_FILENO, &m_saved) != 0) {
            return;
        }
        termios raw = m_saved;
        raw.c_lflag &= static_cast<tcflag_t>(~(ICANON | ECHO));
        raw.c_cc[VMIN] = 1;
        raw.c_cc[VTIME] = 0;
        m_active = tcsetattr(STDIN_FILENO, TCSANOW, &raw) == 0;
    }
    ~RawTerminal()
    {
        if (m_active) {
            tcsetattr(STDIN_FILENO, TCSANOW, &m_saved);
        }
    }
    RawTerminal(const RawTerminal&) = delete;
    RawTerminal& operator=(const RawTerminal&) = delete;

private:
    termios m_saved{};
    bool m_active = false;
};

} // namespace

int main(int argc, char** argv)
{
    bool interactive = false;
    for (int i = 1; i < argc; ++i) {
        interactive = interactive || std::strcmp(argv[i], "--interactive") == 0;
    }
    if (interactive) {
        RawTerminal raw;
        return pnp::cli::run_cli(argc, argv, std::cin, std::cout, std::cerr);
    }
    return pnp::cli::run_cli(argc, argv, std::cin, std::cout, std::cerr);
}
