#include "vpr/cli.hpp"

int main(int argc, char** argv) { return vpr::cli_main(argc, argv); }
