#include <iostream>

#include "doe/cli.h"

int main(int argc, char** argv) { return doe::run_cli(argc, argv, std::cout, std::cerr); }
