#include "cfpred/cli.hpp"

int main(int argc, char** argv) { return cfpred::run_cli(argc, argv); }
