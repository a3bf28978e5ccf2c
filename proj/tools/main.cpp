#include <iostream>

#include "latentdir/cli.hpp"

int main(int argc, char** argv) {
  return latentdir::run_cli(argc, argv, std::cout, std::cerr);
}
