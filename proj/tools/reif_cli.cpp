#include "reif/cli.hpp"

int main(int argc, char** argv) { return reif::cli::run(argc, argv); }
