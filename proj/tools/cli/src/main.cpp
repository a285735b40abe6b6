#include <iostream>
#include <string>
#include <vector>

#include "ni_swarm_cli/app.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return ni_swarm::cli::run(args, std::cout, std::cerr);
}
