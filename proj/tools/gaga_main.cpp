#include <iostream>

#include "gaga/cli/app.hpp"

int main(int argc, char** argv) {
  return gaga::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
