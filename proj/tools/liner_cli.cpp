#include <iostream>

#include "liner/cli.hpp"

int main(int argc, char** argv) { return liner::run_cli(argc, argv, std::cout, std::cerr); }
