#include <iostream>

#include "netvis/cli.hpp"

int main(int argc, char** argv) {
  return netvis::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
