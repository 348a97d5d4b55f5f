#include <iostream>
#include <string>
#include <vector>

#include "setmember/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return setmember::cli::main(args, std::cout, std::cerr);
}
