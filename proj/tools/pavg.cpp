#include "pavg/cli.hpp"

int main(int argc, char** argv) { return pavg::cli::run(argc, argv); }
