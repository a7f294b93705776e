#include "spikectl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return spikectl::run_cli(argc, argv, std::cout, std::cerr); }
