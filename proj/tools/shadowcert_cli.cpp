#include <iostream>
#include <string>
#include <vector>

#include "shadowcert/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return shadowcert::run_cli(args, std::cout, std::cerr);
}
