#include <iostream>
#include <string>
#include <vector>

#include "dqn/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dqn::cli_main(args, std::cout, std::cerr);
}
