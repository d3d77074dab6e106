#include <iostream>

#include "soe_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return soe::run_cli(args, {std::cout, std::cerr, {}});
}
