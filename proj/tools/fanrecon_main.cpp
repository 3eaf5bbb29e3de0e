#include <iostream>

#include "fanrecon/cli.hpp"

int main(int argc, char** argv) {
    return fanrecon::cli::main_entry(argc, argv, std::cout, std::cerr);
}
