#include <iostream>

#include "rubricrank/cli.hpp"

int main(int argc, char** argv) {
    return rubricrank::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
