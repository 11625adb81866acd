#include "rfrecon/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return rfrecon::cli_dispatch(argc, argv, std::cout, std::cerr); }
