#include <iostream>

#include "rotator/cli.hpp"

int main(int argc, char** argv) {
  return rotator::cli::run_cli(argc, argv, std::cout, std::cerr);
}
