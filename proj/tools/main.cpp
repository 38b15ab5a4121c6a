#include <iostream>

#include "fphmc/cli/commands.hpp"

int main(int argc, char** argv) {
  return fphmc::cli::run_cli(argc, argv, std::cout, std::cerr);
}
