#include "marsdust/cli.hpp"

int main(int argc, char** argv) { return marsdust::cli::run(argc, argv); }
