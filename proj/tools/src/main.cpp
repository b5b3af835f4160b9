#include <iostream>

#include "rsma_cli/cli.hpp"

int main(int argc, char** argv) {
  return rsma::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
