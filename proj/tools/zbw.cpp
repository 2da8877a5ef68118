#include <iostream>
#include <string>
#include <vector>

#include "zbw/run.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return zbw::io::run_command(args, std::cout, std::cerr);
}
