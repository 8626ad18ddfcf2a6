#include "rsr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rsr::cli::cli_main(argc, argv, std::cout, std::cerr); }
