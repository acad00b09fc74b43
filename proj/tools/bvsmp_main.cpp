#include "bvsmp/cli_runner.hpp"

int main(int argc, char** argv) { return bvsmp::cli_main(argc, argv); }
