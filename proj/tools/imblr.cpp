#include <iostream>
#include <string>
#include <vector>

#include "imblr/cli/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return imblr::cli::run(args, std::cout, std::cerr);
}
