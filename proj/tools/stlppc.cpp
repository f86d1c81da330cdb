#include <iostream>
#include <string>
#include <vector>

#include "stlppc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stlppc::run_cli(args, std::cout, std::cerr);
}
