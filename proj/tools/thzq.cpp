#include "thzq/cli.hpp"

int main(int argc, char **argv) { return thzq::run_cli(argc, argv); }
