#include <iostream>

#include "fnbo/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fnbo::runCli(args, std::cout, std::cerr);
}
