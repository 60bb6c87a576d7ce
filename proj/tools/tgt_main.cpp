#include <string>
#include <vector>

#include "tgt/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tgt::run(args);
}
