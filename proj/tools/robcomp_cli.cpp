#include <iostream>

#include "robcomp/cli.hpp"

int main(int argc, char** argv) { return robcomp::run_cli(argc, argv, std::cout, std::cerr); }
