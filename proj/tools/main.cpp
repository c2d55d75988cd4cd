#include "csisense/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return csisense::run_cli(argc, argv, std::cout, std::cerr); }
