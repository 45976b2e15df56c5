#include "pedsim/cli.hpp"

int main(int argc, char** argv) { return pedsim::run_cli(argc, argv); }
