#include "ngash/cli.hpp"

int main(int argc, char** argv) { return ngash::cli::run(argc, argv); }
