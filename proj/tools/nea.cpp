#include "nea/cli.hpp"

int main(int argc, char** argv) { return nea::cli::run(argc, argv); }
