#include <iostream>

#include "phibranch/cli.hpp"

int main(int argc, char** argv) { return phibranch::run_cli(argc, argv, std::cout, std::cerr); }
