#include <iostream>

#include "tgate/cli.hpp"

int main(int argc, char** argv) { return tgate::run_cli(argc, argv, std::cout, std::cerr); }
