#include <iostream>

#include "chartlab/cli.hpp"

int main(int argc, char** argv) { return chartlab::run(argc, argv, std::cout, std::cerr); }
