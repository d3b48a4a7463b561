#include "cli.hpp"

int main(int argc, char** argv) {
  return psyrig::cli::run(argc, argv);
}
