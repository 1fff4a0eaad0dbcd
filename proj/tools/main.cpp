#include "sqa/cli.hpp"

int main(int argc, char** argv) { return sqa::cli::run(argc, argv); }
