#include "thermogrid/cli.hpp"

int main(int argc, char** argv) { return thermogrid::cli::run(argc, argv); }
