#include <iostream>
#include <string>
#include <vector>

#include "emfe/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return emfe::cli::run(args, std::cout, std::cerr);
}
