#include <iostream>

#include "fluctuo_cli/commands.hpp"

int main(int argc, char** argv) { return fluctuo::cli::run_cli(argc, argv, std::cout, std::cerr); }
