#include "dslab/cli.hpp"

int main(int argc, char** argv) { return dslab::cli::main_entry(argc, argv); }
