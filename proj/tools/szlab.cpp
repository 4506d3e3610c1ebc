#include <iostream>

#include "szlab/cli.hpp"

int main(int argc, char** argv) { return szlab::cli::run(argc, argv, std::cout, std::cerr); }
