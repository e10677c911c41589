#include <iostream>
#include <string>
#include <vector>

#include "lens/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lens::run_cli(args, std::cout, std::cerr);
}
