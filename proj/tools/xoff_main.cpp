#include <iostream>

#include "xoff/cli.hpp"

int main(int argc, char** argv) { return xoff::run_cli(argc, argv, std::cout, std::cerr); }
