#include "bmx/cli.hpp"

int main(int argc, char** argv) { return bmx::cli::main_entry(argc, argv); }
