#include "qpair_cli.hpp"

int main(int argc, char** argv) { return qpair::cli::run(argc, argv); }
