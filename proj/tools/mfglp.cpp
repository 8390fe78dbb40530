#include <string>
#include <vector>

#include "mfglp/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mfglp::run_command(args);
}
