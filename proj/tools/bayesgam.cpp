#include "bayesgam/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bayesgam::cli::run(argc, argv, std::cout, std::cerr); }
