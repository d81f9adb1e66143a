#include <iostream>
#include <string>
#include <vector>

#include "ewer/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return ewer::cli::run(args, std::cerr);
}
