#include "vizsig/cli.hpp"

int main(int argc, char** argv) { return vizsig::cli::run(argc, argv); }
