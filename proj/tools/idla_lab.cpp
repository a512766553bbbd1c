#include <iostream>

#include "idla/cli.hpp"

int main(int argc, char** argv) { return idla::run_cli(argc, argv, std::cout, std::cerr); }
