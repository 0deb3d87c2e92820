#include <iostream>

#include "fgsm/cli.hpp"

int main(int argc, char** argv) { return fgsm::run_cli(argc, argv, std::cout, std::cerr); }
