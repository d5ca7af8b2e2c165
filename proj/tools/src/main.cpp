#include <iostream>
#include <string>
#include <vector>

#include "coulomb_cli/cli.hpp"

int main(int argc, char** argv) {
    return coulomb::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
