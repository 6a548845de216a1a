#include <iostream>

#include "s2r/cli.hpp"

int main(int argc, char** argv) {
  return s2r::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
