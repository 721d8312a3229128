#include "wms/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wms::cli::run(argc, argv, std::cout, std::cerr); }
