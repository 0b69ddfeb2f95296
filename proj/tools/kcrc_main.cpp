#include <iostream>

#include "kcrc/cli.hpp"

int main(int argc, char** argv) { return kcrc::cli::main(argc, argv, std::cout, std::cerr); }
