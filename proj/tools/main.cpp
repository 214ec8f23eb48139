#include <iostream>

#include "rfmfs/cli.hpp"

int main(int argc, char** argv) { return rfmfs::run_cli(argc, argv, std::cout, std::cerr); }
