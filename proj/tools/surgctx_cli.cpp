#include <string>
#include <vector>

#include "commands.hpp"

int main(int argc, char** argv) {
  return surgctx::cli::run(std::vector<std::string>(argv, argv + argc));
}
