#include <iostream>

#include "helika/cli.hpp"

int main(int argc, char** argv) { return helika::run_cli(argc, argv, std::cout, std::cerr); }
