#include <iostream>

#include "signrec/cli/cli.hpp"

int main(int argc, char** argv) {
  return signrec::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
