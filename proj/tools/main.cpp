#include <iostream>

#include "owdisc/cli.hpp"

int main(int argc, char** argv) { return owdisc::cli::run(argc, argv, std::cout, std::cerr); }
