#include <iostream>
#include <string>
#include <vector>

#include "daisyworld_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return daisyworld::cli::run(args, std::cout, std::cerr);
}
