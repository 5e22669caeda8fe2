#include "grainspect/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return grainspect::run_cli(argc, argv, std::cout, std::cerr); }
