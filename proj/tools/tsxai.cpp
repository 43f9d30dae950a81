#include <iostream>
#include <string>
#include <vector>

#include "tsxai/cli.hpp"

int main(int argc, char** argv) {
    return tsxai::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
