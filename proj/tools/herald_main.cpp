#include <string>
#include <vector>

#include "herald/cli.hpp"

int main(int argc, char** argv) {
    return herald::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
