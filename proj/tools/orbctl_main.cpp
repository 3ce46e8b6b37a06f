#include <iostream>

#include "orbctl/cli.hpp"

int main(int argc, char** argv) { return orbctl::run_cli(argc, argv, std::cout, std::cerr); }
