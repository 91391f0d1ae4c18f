#include "dshc/cli.hpp"

int main(int argc, char** argv) { return dshc::cli::main(argc, argv); }
