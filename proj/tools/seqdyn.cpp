#include <iostream>

#include "seqdyn/runner/cli.hpp"

int main(int argc, char** argv) { return seqdyn::run_cli(argc, argv, std::cout, std::cerr); }
