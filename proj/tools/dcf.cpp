#include <iostream>

#include "dcf/cli.hpp"

int main(int argc, char** argv) { return dcf::run_cli(argc, argv, std::cout, std::cerr); }
