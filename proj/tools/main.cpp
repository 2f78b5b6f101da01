// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "eyesynth/cli.hpp"

int main(int argc, char** argv) { return eyesynth::cli_main(argc, argv, std::cout, std::cerr); }
