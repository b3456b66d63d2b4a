#include <iostream>

#include "pdn/commands.hpp"

int main(int argc, char** argv) { return pdn::run_cli(argc, argv, std::cout, std::cerr); }
