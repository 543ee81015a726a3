#include <iostream>

#include "dragprof/commands.hpp"

int main(int argc, char** argv) { return dragprof::cli::run_cli(argc, argv, std::cout, std::cerr); }
