#include <iostream>

#include "fleetguard/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return fleetguard::run_cli(args, std::cout, std::cerr);
}
