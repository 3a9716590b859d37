#include <string>
#include <vector>

#include "textsmooth/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return textsmooth::run_cli(args);
}
