#include <csignal>
#include <iostream>

#include "dpkit_cli.hpp"

namespace {

void on_signal(int) { dpkit::cli::shutdown_requested().store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return dpkit::cli::run(argc, argv, std::cout, std::cerr);
}
