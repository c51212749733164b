#include "sovdebt/cli.hpp"

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return sovdebt::cli::run(args, std::cout, std::cerr);
}
