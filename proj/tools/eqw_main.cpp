#include <iostream>
#include <string>
#include <vector>

#include "eqw/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return eqw::cli::run(args, std::cout, std::cerr);
}
