#include <iostream>

#include "poolgraph/cli.hpp"

int main(int argc, char** argv) { return poolgraph::run_cli(argc, argv, std::cout, std::cerr); }
