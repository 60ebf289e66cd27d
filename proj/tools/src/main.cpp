#include <iostream>

#include "qpath/cli/commands.hpp"

int main(int argc, char** argv) { return qpath::cli::run(argc, argv, std::cout, std::cerr); }
