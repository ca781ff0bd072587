#include <string>
#include <vector>

#include "ntfhmm/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ntfhmm::run_cli(args);
}
