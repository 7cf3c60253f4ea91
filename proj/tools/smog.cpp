// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "smog/cli.hpp"

int main(int argc, char** argv)
{
    return smog::cli::run(argc, argv, std::cout, std::cerr);
}
