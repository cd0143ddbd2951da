#include "slacksim/cli.hpp"

int main(int argc, char** argv) { return slacksim::run_cli(argc, argv); }
