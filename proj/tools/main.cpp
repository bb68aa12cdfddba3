#include "geowrap/cli.hpp"

int main(int argc, char** argv) { return geowrap::cli::run(argc, argv); }
