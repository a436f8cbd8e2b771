#include "ssmgen/cli.hpp"

int main(int argc, char** argv) { return ssmgen::cli::run(argc, argv); }
