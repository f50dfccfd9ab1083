// SPDX-License-Identifier: MIT
#include "cli_commands.hpp"

int main(int argc, char** argv) { return tfsisr::cli::run(argc, argv); }
