#include "nslab/cli_io.hpp"

int main(int argc, char** argv) { return nslab::run_cli(argc, argv); }
