#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return collabviz::cli::run_command(argc, argv, std::cout, std::cerr);
}
