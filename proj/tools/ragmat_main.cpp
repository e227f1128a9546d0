#include "ragmat/cli.hpp"

int main(int argc, char** argv) { return ragmat::cli::run_cli(argc, argv); }
