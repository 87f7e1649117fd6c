#include <iostream>

#include "tailduality/cli.hpp"

int main(int argc, char** argv) {
    return tailduality::run_cli(argc, argv, std::cout, std::cerr);
}
