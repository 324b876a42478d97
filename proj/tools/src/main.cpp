#include <iostream>

#include "codql/cli.hpp"

int main(int argc, char** argv) {
  return codql::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cerr);
}
