#include "subix/cli.hpp"

int main(int argc, char** argv) { return subix::run_cli(argc, argv); }
