#include <iostream>
#include <string>
#include <vector>

#include "fullece/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fullece::cli::run(args, std::cout, std::cerr);
}
