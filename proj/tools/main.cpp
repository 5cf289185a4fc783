#include <vector>

#include "uvae_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return uvae::cli::run_cli(args);
}
