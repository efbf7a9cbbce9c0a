#include <iostream>
#include <string>
#include <vector>

#include "probe_latency/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return probe_latency::cli::run(args, std::cout, std::cerr);
}
