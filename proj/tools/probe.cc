#include <iostream>
#include <string>
#include <vector>

#include "probecount/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return probecount::run_cli(args, std::cout, std::cerr);
}
