#include "ddrgs/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ddrgs::run_cli(argc, argv, std::cout, std::cerr); }
